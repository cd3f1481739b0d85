"""Rolling-window backtest on historical prices and risk-free rates.

For every window: fit the Merton model to the training years, start the OC
trainer from the fitted (mu, sigma, delta), train on paths simulated from the
fitted model, then run 100 policy-sampling portfolios over the realized
training and evaluation periods, once with the trained theta and once with
the MLE theta.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .data import DatedSeries, Window, WindowSpec, carry_forward, rolling_windows, tbill_to_daily_rate
from .errors import DataError, TrainingDivergedError
from .evaluation import PerformanceReport, performance_stats, replay_portfolios, riskfree_terminal
from .market import STREAM_EVAL, path_rng
from .mle import FitResult, fit, log_returns
from .params import PreferenceParams, Theta
from .trainer import RunConfig, train

logger = logging.getLogger(__name__)

MIN_TRAIN_RETURNS = 100
MIN_EVAL_PRICES = 2

RESULT_HEADER = ["window", "period", "policy", "start", "end", "n_paths", "mean", "se_mean",
                 "vol", "se_vol", "sharpe", "riskfree", "mu", "sigma", "delta"]
TERMINAL_HEADER = ["window", "period", "policy", "path", "terminal"]
WINDOW_HEADER = ["window", "mle_mu", "mle_sigma", "mle_zeta", "mle_mu_j", "mle_sigma_j",
                 "mle_loglik", "mle_converged", "r_train", "theta_mu", "theta_sigma", "theta_delta"]


@dataclass(frozen=True)
class BacktestSettings:
    run: RunConfig
    lam_train_invest: float = 0.01
    lam_eval_invest: float = 0.1
    windows: WindowSpec = WindowSpec()
    n_paths: int = 100
    x0: float = 1.0
    rate_divisor: float = 252.0
    mle_restarts: int = 1


@dataclass(frozen=True)
class PeriodResult:
    window: str
    period: str
    policy: str
    start: str
    end: str
    theta: Theta
    terminals: np.ndarray
    report: PerformanceReport


@dataclass
class WindowResult:
    window: Window
    fit: FitResult
    r_train: float
    theta: Theta
    periods: list[PeriodResult] = field(default_factory=list)


def _slice(prices: DatedSeries, rates: DatedSeries, start, end, label: str, what: str):
    p = prices.between(start, end)
    r = rates.between(start, end)
    if len(p) < MIN_EVAL_PRICES:
        raise DataError(f"window {label}: insufficient {what} data ({len(p)} prices)")
    return p, r


def run_window(window: Window, prices: DatedSeries, daily_rates: DatedSeries,
               settings: BacktestSettings, seed: int, index: int) -> WindowResult:
    label = window.label
    train_p, train_r = _slice(prices, daily_rates, window.train_start, window.train_end, label, "training")
    eval_p, eval_r = _slice(prices, daily_rates, window.eval_start, window.eval_end, label, "evaluation")
    if len(train_p) - 1 < MIN_TRAIN_RETURNS:
        raise DataError(f"window {label}: insufficient training data ({len(train_p) - 1} returns)")

    dt = settings.run.dt
    fitted = fit(log_returns(train_p.values, dt), restarts=settings.mle_restarts, seed=seed)
    mp = fitted.params
    r_train = float(np.mean(train_r.values)) * settings.rate_divisor
    theta_mle = Theta(mp.mu, mp.sigma, mp.delta)

    cfg = replace(settings.run, r=r_train, master_seed=seed * 1000 + index)
    try:
        trace = train(theta_mle, (mp.market, mp.jumps), cfg)
    except TrainingDivergedError as exc:
        raise TrainingDivergedError(f"window {label}: {exc}") from None
    theta_rl = trace.final_theta
    logger.info("window %s: mle=%s trained=%s", label, theta_mle.as_tuple(), theta_rl.as_tuple())

    result = WindowResult(window, fitted, r_train, theta_rl)
    periods = [
        ("train", train_p, train_r, settings.lam_train_invest),
        ("eval", eval_p, eval_r, settings.lam_eval_invest),
    ]
    for k, (period, p, r, lam) in enumerate(periods):
        pref = PreferenceParams(gamma=settings.run.gamma, lam=lam, r=r_train)
        day_rates = r.values[:-1]
        rf = riskfree_terminal(day_rates, settings.x0)
        for j, (policy, theta) in enumerate((("rl", theta_rl), ("mle", theta_mle))):
            rng = path_rng(seed, STREAM_EVAL, 10_000 + 100 * index + 10 * k + j)
            terminals = replay_portfolios(theta, pref, p.values, day_rates, settings.x0,
                                          settings.n_paths, rng)
            report = performance_stats(terminals, pref, rf)
            result.periods.append(PeriodResult(
                label, period, policy, p.dates[0].isoformat(), p.dates[-1].isoformat(),
                theta, terminals, report,
            ))
    return result


def run_backtest(prices: DatedSeries, rate_quotes: DatedSeries, settings: BacktestSettings,
                 seed: int = 0) -> list[WindowResult]:
    """Run every rolling window covered by the price history.

    Rate quotes (annualized percent) are carried forward onto price dates and
    converted to daily simple rates.
    """
    quotes = carry_forward(rate_quotes, prices.dates)
    daily = DatedSeries(quotes.dates, tbill_to_daily_rate(quotes.values, settings.rate_divisor))
    windows = rolling_windows(prices.years(), settings.windows)
    return [run_window(w, prices, daily, settings, seed, i) for i, w in enumerate(windows)]


def _rows_to_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _num(v: float) -> str:
    return repr(float(v))


def results_csv(results: list[WindowResult]) -> str:
    rows = []
    for w in results:
        for pr in w.periods:
            rep = pr.report
            rows.append([pr.window, pr.period, pr.policy, pr.start, pr.end, rep.n_paths,
                         _num(rep.realized_mean), _num(rep.se_mean), _num(rep.realized_vol),
                         _num(rep.se_vol), _num(rep.sharpe), _num(rep.riskfree_terminal),
                         *map(_num, pr.theta.as_tuple())])
    return _rows_to_csv(RESULT_HEADER, rows)


def terminals_csv(results: list[WindowResult]) -> str:
    rows = []
    for w in results:
        for pr in w.periods:
            rows.extend([pr.window, pr.period, pr.policy, i, _num(x)] for i, x in enumerate(pr.terminals))
    return _rows_to_csv(TERMINAL_HEADER, rows)


def windows_csv(results: list[WindowResult]) -> str:
    rows = []
    for w in results:
        p = w.fit.params
        rows.append([w.window.label, *map(_num, (p.mu, p.sigma, p.zeta, p.mu_j, p.sigma_j, w.fit.loglik)),
                     str(w.fit.converged).lower(), _num(w.r_train), *map(_num, w.theta.as_tuple())])
    return _rows_to_csv(WINDOW_HEADER, rows)


def all_finite_sharpes(results: list[WindowResult], period: str = "eval") -> bool:
    return all(math.isfinite(pr.report.sharpe) for w in results for pr in w.periods if pr.period == period)
