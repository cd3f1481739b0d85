import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from emvj.params import REFERENCE_JUMPS, REFERENCE_MARKET, JumpParams, MarketParams, PreferenceParams, Theta
from emvj.policy import delta_merton

settings.register_profile("default", deadline=None, max_examples=50,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def env():
    return REFERENCE_MARKET, REFERENCE_JUMPS


@pytest.fixture
def theta_true():
    return Theta(REFERENCE_MARKET.mu, REFERENCE_MARKET.sigma, delta_merton(REFERENCE_JUMPS))


@pytest.fixture
def pref():
    return PreferenceParams(gamma=1.0, lam=1.0, r=0.0)


def gbm_prices(mu, sigma, n, dt, seed, s0=100.0):
    rng = np.random.default_rng(seed)
    inc = (mu - 0.5 * sigma**2) * dt + sigma * np.sqrt(dt) * rng.standard_normal(n)
    return s0 * np.exp(np.concatenate(([0.0], np.cumsum(inc))))


def business_days(first_year: int, last_year: int):
    import datetime as dt
    d, end = dt.date(first_year, 1, 1), dt.date(last_year, 12, 31)
    out = []
    while d <= end:
        if d.weekday() < 5:
            out.append(d)
        d += dt.timedelta(days=1)
    return out


def write_market_csvs(folder, first_year, last_year, mp=REFERENCE_MARKET, jp=REFERENCE_JUMPS,
                      seed=0, rate_quote=2.0, rate_every=5):
    """Synthetic daily prices at (mp, jp) plus sparse constant T-bill quotes."""
    from emvj.market import STREAM_DATA, TimeGrid, path_rng, simulate_stock_path

    days = business_days(first_year, last_year)
    grid = TimeGrid(T=(len(days) - 1) / 252, n_steps=len(days) - 1)
    prices = simulate_stock_path(mp, jp, grid, 100.0, path_rng(seed, STREAM_DATA, 0)).values
    prices_csv = folder / "prices.csv"
    rates_csv = folder / "rates.csv"
    prices_csv.write_text("date,value\n" + "".join(f"{d.isoformat()},{float(v)!r}\n" for d, v in zip(days, prices)))
    rates_csv.write_text("date,value\n" + "".join(f"{d.isoformat()},{rate_quote!r}\n" for d in days[::rate_every]))
    return prices_csv, rates_csv


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
