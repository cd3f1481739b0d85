"""Exit criteria.  Each test prints one PASS/FAIL line; the lines are repeated
in the terminal summary so they are visible without ``-s``."""

import csv
import io
import math
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import integrate, stats

from emvj import policy as P
from emvj.cli import main
from emvj.market import STREAM_EVAL, TimeGrid, path_rng, simulate_stock_path, simulate_wealth_theta
from emvj.mle import fit, log_returns
from emvj.params import REFERENCE_JUMPS, REFERENCE_MARKET, JumpParams, PreferenceParams, Theta
from emvj.trainer import RunConfig, oc_losses, train

from conftest import write_market_csvs

pytestmark = pytest.mark.acceptance

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
ENV = (REFERENCE_MARKET, REFERENCE_JUMPS)
THETA_TRUE = Theta(REFERENCE_MARKET.mu, REFERENCE_MARKET.sigma, P.delta_merton(REFERENCE_JUMPS))
TARGET = np.array([0.0878, 0.1321, 0.1449])

# reference performance table: gamma -> (mean, se), (vol, se), (J, se), theoretical mean, theoretical V
REFERENCE_TABLE = {
    0.1: ((2.9980, 0.3032), (3.0316, 0.2154), (2.5384, 0.3055), 3.0213, 2.0106),
    0.5: ((1.3996, 0.0606), (0.6063, 0.0431), (1.3077, 0.0611), 1.4043, 1.2021),
    1.0: ((1.1998, 0.0303), (0.3032, 0.0215), (1.1538, 0.0305), 1.2021, 1.1011),
    2.0: ((1.0999, 0.0152), (0.1516, 0.0108), (1.0770, 0.0153), 1.1011, 1.0505),
    5.0: ((1.0400, 0.0061), (0.0606, 0.0043), (1.0308, 0.0061), 1.0404, 1.0202),
}

RESULTS: list[str] = []


def record(n: int, name: str, ok: bool, detail: str, seconds: float) -> None:
    line = f"criterion {n} [{'PASS' if ok else 'FAIL'}] {name}: {detail} ({seconds:.1f}s)"
    print(line)
    RESULTS.append(line)


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


# 1 -------------------------------------------------------------------------

def _delta_sq_quad(jp):
    dens = stats.norm(jp.mu_j, jp.sigma_j).pdf
    val, _ = integrate.quad(lambda z: np.expm1(z) ** 2 * dens(z), jp.mu_j - 12 * jp.sigma_j,
                            jp.mu_j + 12 * jp.sigma_j, epsabs=0, epsrel=1e-12, limit=200)
    return jp.zeta * val


def test_delta_aggregation():
    t0 = time.perf_counter()
    delta = P.delta_merton(REFERENCE_JUMPS)
    ok_ref = abs(delta - 0.1449) <= 1e-4
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(20):
        jp = JumpParams(rng.uniform(0.5, 80), rng.uniform(-0.3, 0.3), rng.uniform(0.005, 0.3))
        got, ref = P.delta_squared_merton(jp), _delta_sq_quad(jp)
        worst = max(worst, abs(got - ref) / abs(ref))
    ok_quad = worst < 5e-7  # agreement to 6 significant digits
    secs = time.perf_counter() - t0
    ok = ok_ref and ok_quad and secs < 1.0
    record(1, "delta aggregation", ok, f"delta={delta:.6f}, worst quadrature rel err={worst:.1e}", secs)
    assert ok


# 2 -------------------------------------------------------------------------

def martingale_means(theta: Theta, n_paths: int = 10_000, seed: int = 0):
    cfg = RunConfig(lam=1.0, gamma=1.0, r=0.0)
    pref = cfg.preferences
    losses = np.array([
        oc_losses(simulate_wealth_theta(theta, ENV, pref, cfg.grid, cfg.x0, path_rng(seed, STREAM_EVAL, i),
                                        jump_sampling=cfg.jump_sampling, jump_coupling=cfg.jump_coupling),
                  theta, pref, cfg.T, cfg.test_variant)
        for i in range(n_paths)
    ])
    return losses.mean(axis=0), losses.std(axis=0, ddof=1) / math.sqrt(n_paths)


def martingale_csv(seed: int = 0) -> str:
    mean, se = martingale_means(THETA_TRUE, seed=seed)
    pert = Theta(1.5 * THETA_TRUE.mu, THETA_TRUE.sigma, THETA_TRUE.delta)
    pmean, pse = martingale_means(pert, seed=seed)
    lines = ["theta,coord,mean,se"]
    for tag, m, s in (("true", mean, se), ("mu+50%", pmean, pse)):
        lines += [f"{tag},{j},{float(m[j])!r},{float(s[j])!r}" for j in range(3)]
    return "\n".join(lines) + "\n"


def test_martingale_property():
    t0 = time.perf_counter()
    rows = _rows(martingale_csv())
    true = [r for r in rows if r["theta"] == "true"]
    pert = [r for r in rows if r["theta"] == "mu+50%"]
    within = all(abs(float(r["mean"])) <= 3 * float(r["se"]) for r in true)
    outside = abs(float(pert[0]["mean"])) > 3 * float(pert[0]["se"])
    secs = time.perf_counter() - t0
    ok = within and outside and secs < 120
    detail = ", ".join(f"L{r['coord']}={float(r['mean']):+.4f}/{float(r['se']):.4f}" for r in true)
    detail += f"; perturbed L0={float(pert[0]['mean']):+.4f}/{float(pert[0]['se']):.4f}"
    record(2, "martingale at theta_true", ok, detail, secs)
    assert ok


# 3 -------------------------------------------------------------------------

def test_parameter_convergence(tmp_path):
    t0 = time.perf_counter()
    assert main(["train", "--config", str(CONFIGS / "train.ini"), "--out", str(tmp_path)]) == 0
    last = _rows((tmp_path / "trace.csv").read_text())[-1]
    theta = np.array([float(last[k]) for k in ("mu", "sigma", "delta")])
    rel = np.abs(theta / TARGET - 1)
    secs = time.perf_counter() - t0
    ok = bool(np.all(rel <= 0.10)) and int(last["epoch"]) < 2000 and secs < 300
    record(3, "parameter convergence", ok,
           f"theta={np.round(theta, 4).tolist()}, rel err={np.round(rel, 3).tolist()}", secs)
    assert ok


# 4 -------------------------------------------------------------------------

def test_reference_performance_table(tmp_path):
    t0 = time.perf_counter()
    assert main(["evaluate", "--config", str(CONFIGS / "evaluate.ini"), "--out", str(tmp_path)]) == 0
    report = _rows((tmp_path / "report.csv").read_text())
    failures = []
    for row in report:
        g = float(row["gamma"])
        (m, sm), (v, sv), (j, sj), th_mean, th_V = REFERENCE_TABLE[g]
        checks = {
            "mean": abs(float(row["mean"]) - m) <= 3 * sm,
            "vol": abs(float(row["vol"]) - v) <= 3 * sv,
            "J": abs(float(row["j_emp"]) - j) <= 3 * sj,
            "theo_mean": abs(float(row["theo_mean"]) / th_mean - 1) <= 0.01,
            "theo_V": abs(float(row["theo_V"]) / th_V - 1) <= 0.01,
        }
        failures += [f"gamma={g} {k}" for k, good in checks.items() if not good]
    secs = time.perf_counter() - t0
    ok = not failures and len(report) == 5 and secs < 60
    record(4, "performance table", ok, "all 25 checks within tolerance" if not failures else
           "failed: " + ", ".join(failures), secs)
    assert ok


# 5 -------------------------------------------------------------------------

def test_closed_form_identities():
    t0 = time.perf_counter()
    T = 1.0
    pref = PreferenceParams(gamma=1.0, lam=1.0, r=0.0)
    th = THETA_TRUE
    ok_terminal = P.value_C(T, th, pref, T) == 0.0 and P.aux_h(T, th, pref, T) == 0.0
    c0 = P.value_C(0.0, th, pref, T)
    ok_linear = all(P.value_C(t, th, pref, T) == pytest.approx((T - t) * c0, rel=1e-14)
                    for t in np.linspace(0, 1, 11))
    ok_var = P.equilibrium_policy(th, pref).variance == pref.lam / (pref.gamma * th.total_variance)
    worst = 0.0
    for t in (0.0, 0.3, 0.8):
        ks = P.test_functions(t, th, pref, T)
        for j, name in ((1, "sigma"), (2, "delta")):
            x = getattr(th, name)
            h = 1e-5 * x

            def c_at(v):
                return P.value_C(t, Theta(**{**dict(mu=th.mu, sigma=th.sigma, delta=th.delta), name: v}), pref, T)

            fd = (c_at(x + h) - c_at(x - h)) / (2 * h)
            worst = max(worst, abs(ks[j] - fd) / abs(fd))
    secs = time.perf_counter() - t0
    ok = ok_terminal and ok_linear and ok_var and worst <= 1e-6
    record(5, "closed-form identities", ok,
           f"C(T)=h(T)=0 {ok_terminal}, linear {ok_linear}, variance {ok_var}, FD rel err={worst:.1e}", secs)
    assert ok


# 6 -------------------------------------------------------------------------

def test_mle_self_consistency():
    t0 = time.perf_counter()
    dt = 1 / 252
    grid = TimeGrid(T=2520 * dt, n_steps=2520)
    hits = {"mu": 0, "sigma": 0, "delta": 0}
    estimates = []
    for seed in range(10):
        prices = simulate_stock_path(*ENV, grid, 1.0, path_rng(seed, 4, 0)).values
        p = fit(log_returns(prices, dt)).params
        estimates.append((p.mu, p.sigma, p.delta))
        hits["mu"] += abs(p.mu / 0.0878 - 1) <= 0.25
        hits["sigma"] += abs(p.sigma / 0.1321 - 1) <= 0.25
        hits["delta"] += abs(p.delta / 0.1449 - 1) <= 0.25
    secs = time.perf_counter() - t0
    ok = all(v >= 8 for v in hits.values()) and secs < 120
    mus = [round(e[0], 3) for e in estimates]
    record(6, "MLE self-consistency", ok, f"seeds within 25%: {hits}; mu_hat={mus}", secs)
    assert ok


# 7 -------------------------------------------------------------------------

def test_backtest_plumbing(tmp_path):
    t0 = time.perf_counter()
    prices, rates = write_market_csvs(tmp_path, 2000, 2023, seed=0)
    out = tmp_path / "bt"
    code = main(["backtest", "--config", str(CONFIGS / "backtest.ini"), "--prices", str(prices),
                 "--rates", str(rates), "--out", str(out)])
    assert code == 0
    rows = _rows((out / "backtest.csv").read_text())
    terms = _rows((out / "terminals.csv").read_text())
    windows = sorted({r["window"] for r in rows})
    by_key: dict = {}
    for t in terms:
        by_key.setdefault((t["window"], t["period"], t["policy"]), []).append(float(t["terminal"]))
    exact = True
    finite = True
    for r in rows:
        x = np.array(by_key[(r["window"], r["period"], r["policy"])])
        sd = x.std(ddof=1)
        exact &= float(r["se_mean"]) == sd / math.sqrt(x.size)
        exact &= float(r["se_vol"]) == sd / math.sqrt(2 * (x.size - 1))
        if r["period"] == "eval":
            finite &= math.isfinite(float(r["sharpe"]))
    secs = time.perf_counter() - t0
    ok = len(windows) == 14 and finite and exact and secs < 600
    record(7, "backtest plumbing", ok,
           f"{len(windows)} windows ({windows[0]} .. {windows[-1]}), eval Sharpe finite {finite}, SE exact {exact}",
           secs)
    assert ok


# 8 -------------------------------------------------------------------------

def test_determinism(tmp_path):
    t0 = time.perf_counter()
    same = {}
    same["martingale"] = martingale_csv(seed=0) == martingale_csv(seed=0)
    for cmd, cfg in (("train", "train.ini"), ("evaluate", "evaluate.ini")):
        outs = []
        for k in range(2):
            d = tmp_path / f"{cmd}{k}"
            assert main([cmd, "--config", str(CONFIGS / cfg), "--seed", "0", "--out", str(d)]) == 0
            outs.append({f.name: f.read_bytes() for f in sorted(d.iterdir())})
        same[cmd] = outs[0] == outs[1]
    secs = time.perf_counter() - t0
    ok = all(same.values())
    record(8, "determinism", ok, ", ".join(f"{k} identical {v}" for k, v in same.items()), secs)
    assert ok
