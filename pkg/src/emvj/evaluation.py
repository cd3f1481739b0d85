"""Monte-Carlo investment evaluation and summary statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError
from .market import (
    STREAM_EVAL,
    TimeGrid,
    path_rng,
    simulate_stock_path,
    simulate_wealth_sampled,
    simulate_wealth_theta,
)
from .params import JumpParams, MarketParams, PreferenceParams, Theta
from .policy import aux_h, equilibrium_policy, value_C

MODES = ("theta-process", "sampled-policy", "policy-mean")

REPORT_HEADER = ["n_paths", "mean", "se_mean", "vol", "se_vol", "sharpe",
                 "j_emp", "se_j", "riskfree", "theo_mean", "theo_V"]


@dataclass(frozen=True)
class PerformanceReport:
    n_paths: int
    realized_mean: float
    se_mean: float
    realized_vol: float
    se_vol: float
    sharpe: float
    j_empirical: float
    se_j: float
    riskfree_terminal: float
    theoretical_mean: float = math.nan
    theoretical_V: float = math.nan
    sharpe_degenerate: bool = False

    def csv_values(self) -> list[str]:
        vals = [self.n_paths, self.realized_mean, self.se_mean, self.realized_vol, self.se_vol,
                self.sharpe, self.j_empirical, self.se_j, self.riskfree_terminal,
                self.theoretical_mean, self.theoretical_V]
        return [str(vals[0])] + [repr(float(v)) for v in vals[1:]]

    def to_csv(self) -> str:
        return ",".join(REPORT_HEADER) + "\n" + ",".join(self.csv_values()) + "\n"


def performance_stats(terminals, pref: PreferenceParams, riskfree_terminal: float,
                      theoretical: tuple[float, float] | None = None) -> PerformanceReport:
    """Terminal-wealth statistics with Monte-Carlo standard errors.

    se_mean = sd/sqrt(n), se_vol = sd/sqrt(2(n-1)); J uses the sample variance
    with no entropy bonus.  se_j is the standard error of the per-path
    contributions x_i - (gamma/2)(x_i - mean)^2.  A zero-volatility sample
    gets Sharpe 0 and ``sharpe_degenerate=True``.
    """
    x = np.asarray(terminals, dtype=float)
    n = x.size
    if n < 2:
        raise InvalidParameterError("need at least two terminal values")
    mean = float(x.mean())
    # identical values: report exactly zero spread, not rounding residue
    var = 0.0 if np.ptp(x) == 0 else float(x.var(ddof=1))
    sd = math.sqrt(var)
    degenerate = sd == 0.0
    sharpe = 0.0 if degenerate else (mean - riskfree_terminal) / sd
    contrib = x - 0.5 * pref.gamma * (x - mean) ** 2
    theo_mean, theo_V = theoretical if theoretical is not None else (math.nan, math.nan)
    return PerformanceReport(
        n_paths=n,
        realized_mean=mean,
        se_mean=sd / math.sqrt(n),
        realized_vol=sd,
        se_vol=sd / math.sqrt(2 * (n - 1)),
        sharpe=sharpe,
        j_empirical=mean - 0.5 * pref.gamma * var,
        se_j=0.0 if degenerate else float(contrib.std(ddof=1)) / math.sqrt(n),
        riskfree_terminal=riskfree_terminal,
        theoretical_mean=theo_mean,
        theoretical_V=theo_V,
        sharpe_degenerate=degenerate,
    )


def theoretical_benchmarks(theta: Theta, pref: PreferenceParams, T: float, x0: float) -> tuple[float, float]:
    """(x0 + h(0), x0 + C(0)) at the caller's lambda."""
    if T == 0:
        return x0, x0
    return x0 + aux_h(0.0, theta, pref, T), x0 + value_C(0.0, theta, pref, T)


def policy_mean_wealth(u: float, stock: np.ndarray, x0: float, r: float, dt: float) -> np.ndarray:
    """Hold ``u`` dollars in the stock each step; the rest earns r*dt simple interest."""
    growth = stock[1:] / stock[:-1] - 1.0
    x = np.empty(len(stock))
    x[0] = x0
    for n, g in enumerate(growth):
        x[n + 1] = x[n] + u * g + (x[n] - u) * r * dt
    return x


def run_evaluation(mode: str, theta: Theta, pref: PreferenceParams,
                   env: tuple[MarketParams, JumpParams], grid: TimeGrid, x0: float,
                   n_paths: int, master_seed: int, jump_sampling: str = "per_step",
                   jump_coupling: str = "mean", s0: float = 1.0) -> np.ndarray:
    """Terminal wealth of ``n_paths`` independent simulated investors.

    Paths draw from the evaluation RNG stream, disjoint from training.
    """
    if mode not in MODES:
        raise InvalidParameterError(f"mode must be one of {MODES}")
    if n_paths < 2:
        raise InvalidParameterError("n_paths must be >= 2")
    mp, jp = env
    pol = equilibrium_policy(theta, pref)
    out = np.empty(n_paths)
    for i in range(n_paths):
        rng = path_rng(master_seed, STREAM_EVAL, i)
        if mode == "policy-mean":
            stock = simulate_stock_path(mp, jp, grid, s0, rng, jump_sampling=jump_sampling)
            out[i] = policy_mean_wealth(pol.mean, stock.values, x0, pref.r, grid.dt)[-1]
        elif mode == "sampled-policy":
            out[i] = simulate_wealth_sampled(pol, env, pref, grid, x0, rng,
                                             jump_sampling=jump_sampling).terminal
        else:
            out[i] = simulate_wealth_theta(theta, env, pref, grid, x0, rng,
                                           jump_sampling=jump_sampling,
                                           jump_coupling=jump_coupling).terminal
    return out


def replay_portfolios(theta: Theta, pref: PreferenceParams, prices, daily_rates,
                      x0: float, n_paths: int, rng: np.random.Generator) -> np.ndarray:
    """Run ``n_paths`` portfolios over one realized price path.

    Each day every portfolio draws its own position u ~ pi^theta; the
    remainder earns that day's simple rate.  Returns terminal values.
    """
    prices = np.asarray(prices, dtype=float)
    rates = np.asarray(daily_rates, dtype=float)
    if len(rates) != len(prices) - 1:
        raise InvalidParameterError("need one daily rate per price interval")
    pol = equilibrium_policy(theta, pref)
    growth = prices[1:] / prices[:-1] - 1.0
    u = pol.mean + pol.std * rng.standard_normal((len(growth), n_paths))
    x = np.full(n_paths, float(x0))
    for n in range(len(growth)):
        x = x + u[n] * growth[n] + (x - u[n]) * rates[n]
    return x


def riskfree_terminal(daily_rates, x0: float = 1.0) -> float:
    return float(x0 * np.prod(1.0 + np.asarray(daily_rates, dtype=float)))

