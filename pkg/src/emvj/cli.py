"""Command-line front end: ``emvj {fit,train,simulate,evaluate,backtest}``.

Settings come from a sectioned ``key = value`` file (``--config``); flags
override the file.  ``--set section.key=value`` overrides any single field.
Every command writes CSV or key=value text into ``--out`` and is
deterministic given the config and seed.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from pathlib import Path

from . import config as C
from .backtest import BacktestSettings, results_csv, run_backtest, terminals_csv, windows_csv
from .data import load_csv
from .errors import ConfigError, EMVJError
from .evaluation import MODES, REPORT_HEADER, performance_stats, run_evaluation, theoretical_benchmarks
from .market import JUMP_COUPLING, JUMP_SAMPLING, STREAM_SIMULATE, TimeGrid, path_rng, simulate_stock_path, simulate_wealth_theta
from .mle import MertonParams, fit, log_returns
from .params import PreferenceParams, Theta
from .policy import delta_merton
from .simplex import SimplexOptions
from .trainer import train

logger = logging.getLogger("emvj")

EXIT_OK, EXIT_ERROR, EXIT_NOT_CONVERGED = 0, 2, 3
DEFAULT_GAMMAS = (0.1, 0.5, 1.0, 2.0, 5.0)


def read_key_values(path) -> dict[str, str]:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"file not found: {path}")
    out = {}
    for n, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}: line {n} is not key = value")
        out[key.strip()] = value.strip()
    return out


def _floats(kv: dict, keys, source) -> list[float]:
    try:
        return [float(kv[k]) for k in keys]
    except KeyError as exc:
        raise ConfigError(f"{source}: missing key {exc.args[0]}") from None
    except ValueError:
        raise ConfigError(f"{source}: non-numeric value") from None


def read_theta(path) -> Theta:
    return Theta(*_floats(read_key_values(path), ("mu", "sigma", "delta"), path))


def read_fitted(path) -> MertonParams:
    return MertonParams(*_floats(read_key_values(path), ("mu", "sigma", "zeta", "mu_j", "sigma_j"), path))


def theta_text(theta: Theta) -> str:
    return "".join(f"{k} = {v!r}\n" for k, v in zip(("mu", "sigma", "delta"), theta.as_tuple()))


def _write(out: Path, name: str, text: str) -> Path:
    path = out / name
    path.write_text(text, encoding="utf-8")
    logger.info("wrote %s", path)
    return path


def _load_series(cfg: C.Config, key: str, value_key: str = "value_column"):
    date_col = cfg.get_str("data", "date_column", "date")
    value_col = cfg.get_str("data", value_key, "value")
    return load_csv(cfg.raw("data", key), date_col, value_col)


# --- commands -------------------------------------------------------------

def cmd_fit(cfg: C.Config, out: Path) -> int:
    C.check_single_source(cfg, want_csv=True)
    run = C.run_config(cfg)
    prices = _load_series(cfg, "prices")
    rs = log_returns(prices.values, run.dt)
    opts = SimplexOptions(
        max_iters=cfg.get_int("fit", "max_iters", 4000),
        x_tol=cfg.get_float("fit", "x_tol", 1e-7),
        f_tol=cfg.get_float("fit", "f_tol", 1e-9),
    )
    result = fit(rs, m_max=cfg.get_int("fit", "m_max", 2), opts=opts,
                 restarts=cfg.get_int("fit", "restarts", 1), seed=C.seed(cfg))
    _write(out, "fit.txt", result.to_text())
    if not result.converged:
        print(f"fit did not converge: {result.diagnostics}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_train(cfg: C.Config, out: Path) -> int:
    C.check_single_source(cfg, want_csv=False)
    run = C.run_config(cfg)
    trace = train(C.theta0(cfg), C.environment(cfg), run)
    _write(out, "trace.csv", trace.to_csv())
    _write(out, "theta.txt", theta_text(trace.final_theta))
    return EXIT_OK


def cmd_simulate(cfg: C.Config, out: Path) -> int:
    C.check_single_source(cfg, want_csv=False)
    run = C.run_config(cfg)
    env = C.environment(cfg)
    kind = cfg.get_choice("simulate", "kind", ("stock", "wealth"), "stock")
    n_paths = cfg.get_int("simulate", "n_paths", 1)
    if n_paths < 1:
        raise ConfigError("[simulate] n_paths: must be >= 1")
    s0 = cfg.get_float("simulate", "s0", 1.0)
    grid = run.grid
    theta = C.theta0(cfg)
    columns = []
    for i in range(n_paths):
        rng = path_rng(run.master_seed, STREAM_SIMULATE, i)
        if kind == "stock":
            path = simulate_stock_path(*env, grid, s0, rng, jump_sampling=run.jump_sampling,
                                       compensate=run.compensate)
        else:
            path = simulate_wealth_theta(theta, env, run.preferences, grid, run.x0, rng,
                                         jump_sampling=run.jump_sampling,
                                         jump_coupling=run.jump_coupling, compensate=run.compensate)
        columns.append(path.values)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t"] + [f"path_{i}" for i in range(n_paths)])
    for n, t in enumerate(grid.times):
        writer.writerow([repr(float(t))] + [repr(float(col[n])) for col in columns])
    _write(out, "paths.csv", buf.getvalue())
    return EXIT_OK


def cmd_evaluate(cfg: C.Config, out: Path) -> int:
    C.check_single_source(cfg, want_csv=None)
    run = C.run_config(cfg)
    if cfg.has("data", "prices"):
        raise ConfigError("[data] prices: evaluate runs on a simulated environment or a fitted [data] params file")
    if cfg.has("data", "params"):
        fitted = read_fitted(cfg.raw("data", "params"))
        env = (fitted.market, fitted.jumps)
    else:
        env = C.environment(cfg)
    if cfg.has("evaluate", "theta"):
        theta = read_theta(cfg.raw("evaluate", "theta"))
    else:
        mp, jp = env
        theta = Theta(mp.mu, mp.sigma, delta_merton(jp))
    mode = cfg.get_choice("evaluate", "mode", MODES, "policy-mean")
    gammas = cfg.get_floats("evaluate", "gammas", DEFAULT_GAMMAS)
    # policy-mean investing is the zero-exploration strategy, so its benchmarks use lambda = 0
    lam = cfg.get_float("evaluate", "lam", 0.0 if mode == "policy-mean" else run.lam)
    n_paths = cfg.get_int("evaluate", "n_paths", 100)
    sampling = cfg.get_choice("evaluate", "jump_sampling", JUMP_SAMPLING, "per_path")
    coupling = cfg.get_choice("evaluate", "jump_coupling", JUMP_COUPLING, "mean")
    grid = TimeGrid.from_dt(run.T, run.dt)
    rows = []
    for gamma in gammas:
        pref = PreferenceParams(gamma=gamma, lam=lam, r=run.r)
        terminals = run_evaluation(mode, theta, pref, env, grid, run.x0, n_paths, run.master_seed,
                                   jump_sampling=sampling, jump_coupling=coupling)
        rf = run.x0 * (1.0 + run.r * grid.dt) ** grid.n_steps
        report = performance_stats(terminals, pref, rf, theoretical_benchmarks(theta, pref, run.T, run.x0))
        rows.append([repr(float(gamma))] + report.csv_values())
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["gamma"] + REPORT_HEADER)
    writer.writerows(rows)
    _write(out, "report.csv", buf.getvalue())
    return EXIT_OK


def cmd_backtest(cfg: C.Config, out: Path) -> int:
    C.check_single_source(cfg, want_csv=True)
    if not cfg.has("data", "rates"):
        raise ConfigError("[data] rates: required for backtest")
    run = C.run_config(cfg)
    settings = BacktestSettings(
        run=run,
        lam_train_invest=cfg.get_float("backtest", "lam_train", 0.01),
        lam_eval_invest=cfg.get_float("backtest", "lam_eval", 0.1),
        windows=C.window_spec(cfg),
        n_paths=cfg.get_int("backtest", "n_paths", 100),
        x0=run.x0,
        rate_divisor=cfg.get_float("backtest", "rate_divisor", 252.0),
        mle_restarts=cfg.get_int("backtest", "restarts", 1),
    )
    if settings.n_paths < 2:
        raise ConfigError("[backtest] n_paths: must be >= 2")
    prices = _load_series(cfg, "prices")
    rates = load_csv(cfg.raw("data", "rates"), cfg.get_str("data", "date_column", "date"),
                     cfg.get_str("data", "rate_column", "value"))
    results = run_backtest(prices, rates, settings, seed=C.seed(cfg))
    _write(out, "backtest.csv", results_csv(results))
    _write(out, "terminals.csv", terminals_csv(results))
    _write(out, "windows.csv", windows_csv(results))
    return EXIT_OK


COMMANDS = {
    "fit": (cmd_fit, "fit the Merton jump-diffusion to a price CSV by maximum likelihood"),
    "train": (cmd_train, "learn theta = (mu, sigma, delta) with the OC-loss trainer"),
    "simulate": (cmd_simulate, "write simulated stock or wealth paths"),
    "evaluate": (cmd_evaluate, "Monte-Carlo performance report over a list of risk aversions"),
    "backtest": (cmd_backtest, "rolling-window fit / train / replay on historical data"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="emvj", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", metavar="PATH", help="sectioned key = value settings file")
        p.add_argument("--seed", type=int, help="master seed (overrides [run] seed)")
        p.add_argument("--out", metavar="DIR", help="output directory (overrides [run] out; default .)")
        p.add_argument("--set", metavar="SECTION.KEY=VALUE", action="append", default=[],
                       help="override one config field; repeatable")
        p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
        if name in ("fit", "backtest"):
            p.add_argument("--prices", metavar="CSV", help="price series (overrides [data] prices)")
        if name == "backtest":
            p.add_argument("--rates", metavar="CSV", help="T-bill quotes in percent (overrides [data] rates)")
        if name == "evaluate":
            p.add_argument("--theta", metavar="PATH", help="theta file from train (overrides [evaluate] theta)")
            p.add_argument("--params", metavar="PATH", help="fitted parameter file from fit (overrides [data] params)")
    return parser


def resolve_config(args) -> C.Config:
    cfg = C.Config.load(args.config) if args.config else C.Config()
    for item in args.set:
        target, sep, value = item.partition("=")
        section, dot, key = target.partition(".")
        if not sep or not dot:
            raise ConfigError(f"--set expects SECTION.KEY=VALUE, got {item!r}")
        cfg.set(section.strip(), key.strip(), value)
    flags = {
        ("run", "seed"): args.seed,
        ("run", "out"): args.out,
        ("data", "prices"): getattr(args, "prices", None),
        ("data", "rates"): getattr(args, "rates", None),
        ("evaluate", "theta"): getattr(args, "theta", None),
        ("data", "params"): getattr(args, "params", None),
    }
    for (section, key), value in flags.items():
        if value is not None:
            cfg.set(section, key, value)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        out = Path(cfg.get_str("run", "out", "."))
        out.mkdir(parents=True, exist_ok=True)
        handler = COMMANDS[args.command][0]
        return handler(cfg, out)
    except (EMVJError, OSError) as exc:
        print(f"emvj {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
