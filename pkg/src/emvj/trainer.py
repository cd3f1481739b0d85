"""Orthogonality-condition training of theta = (mu, sigma, delta).

Each epoch simulates one wealth path under the current theta, evaluates the
discretized OC loss for the three coordinates on that path and moves
``theta_j <- theta_j + eta_j * L_j``.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError, TrainingDivergedError
from .market import (
    STREAM_TRAIN,
    PathGrid,
    TimeGrid,
    path_rng,
    simulate_wealth_theta,
)
from .params import JumpParams, MarketParams, PreferenceParams, Theta
from .policy import test_function_coefficients

logger = logging.getLogger(__name__)

SIGMA_FLOOR = 1e-4

TRACE_HEADER = [
    "epoch", "mu", "sigma", "delta",
    "loss_mu", "loss_sigma", "loss_delta",
    "eta_mu", "eta_sigma", "eta_delta",
]


@dataclass(frozen=True)
class RunConfig:
    n_epochs: int = 2000
    T: float = 1.0
    dt: float = 1 / 252
    lam: float = 1.0
    gamma: float = 1.0
    r: float = 0.0
    x0: float = 1.0
    base_rates: tuple[float, float, float] = (1e-4, 2.5e-4, 1e-3)
    lr_start: float = 1.0
    lr_end: float = 0.0
    master_seed: int = 0
    batch_size: int = 1
    jump_sampling: str = "per_step"
    jump_coupling: str = "quantile"
    compensate: bool = True
    test_variant: str = "printed"

    def __post_init__(self):
        if self.n_epochs < 1:
            raise InvalidParameterError("n_epochs must be >= 1")
        if not self.dt > 0:
            raise InvalidParameterError("dt must be > 0")
        if len(self.base_rates) != 3 or any(not (eta >= 0) for eta in self.base_rates):
            raise InvalidParameterError("base_rates must be three non-negative numbers")
        if self.batch_size < 1:
            raise InvalidParameterError("batch_size must be >= 1")
        self.grid  # validates T / dt
        self.preferences  # validates gamma / lambda

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid.from_dt(self.T, self.dt)

    @property
    def preferences(self) -> PreferenceParams:
        return PreferenceParams(gamma=self.gamma, lam=self.lam, r=self.r)


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    theta: Theta
    losses: tuple[float, float, float]
    rates: tuple[float, float, float]


@dataclass
class TrainTrace:
    records: list[EpochRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def final_theta(self) -> Theta:
        return self.records[-1].theta

    def thetas(self) -> np.ndarray:
        return np.array([rec.theta.as_tuple() for rec in self.records])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for rec in self.records:
            writer.writerow([rec.epoch, *map(repr, rec.theta.as_tuple()),
                             *map(repr, rec.losses), *map(repr, rec.rates)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> TrainTrace:
        rows = list(csv.DictReader(io.StringIO(text)))
        records = []
        for row in rows:
            records.append(EpochRecord(
                epoch=int(row["epoch"]),
                theta=Theta(float(row["mu"]), float(row["sigma"]), float(row["delta"])),
                losses=tuple(float(row[k]) for k in ("loss_mu", "loss_sigma", "loss_delta")),
                rates=tuple(float(row[k]) for k in ("eta_mu", "eta_sigma", "eta_delta")),
            ))
        return cls(records)


def oc_losses(path: PathGrid, theta: Theta, pref: PreferenceParams, T: float,
              variant: str = "printed") -> np.ndarray:
    """Discretized OC loss for all three coordinates on one wealth path.

    L_j = sum_n dV/dtheta_j(t_n) * {dV_n - (gamma/2) d(g^2)_n + (lambda/2) log(2 pi e lambda/(gamma S)) dt}
    """
    if pref.lam <= 0:
        raise InvalidParameterError("the OC loss needs lambda > 0")
    t = np.asarray(path.times, dtype=float)
    x = np.asarray(path.values, dtype=float)
    gS = pref.gamma * theta.total_variance
    excess = theta.mu - pref.r
    log_term = 0.5 * pref.lam * math.log(2 * math.pi * pref.lam / gS)
    tau = T - t
    C = tau * (excess**2 / (2 * gS) + log_term)
    h = tau * excess**2 / gS
    V = x + C
    g = x + h
    entropy_dt = (log_term + 0.5 * pref.lam) * np.diff(t)
    dM = np.diff(V) - 0.5 * pref.gamma * np.diff(g * g) + entropy_dt
    k = np.array(test_function_coefficients(theta, pref, variant))
    return k * float(tau[:-1] @ dM)


def oc_loss(j: int, path: PathGrid, theta: Theta, cfg: RunConfig) -> float:
    """OC loss for coordinate j in 1..3 (mu, sigma, delta)."""
    if j not in (1, 2, 3):
        raise InvalidParameterError("parameter index must be 1, 2 or 3")
    return float(oc_losses(path, theta, cfg.preferences, cfg.T, cfg.test_variant)[j - 1])


def lr_schedule(epoch: int, cfg: RunConfig) -> tuple[float, float, float]:
    if not 0 <= epoch < cfg.n_epochs:
        raise InvalidParameterError(f"epoch {epoch} outside [0, {cfg.n_epochs})")
    if cfg.n_epochs == 1:
        factor = cfg.lr_start
    else:
        factor = cfg.lr_start + (cfg.lr_end - cfg.lr_start) * epoch / (cfg.n_epochs - 1)
    return tuple(base * factor for base in cfg.base_rates)


def _apply_update(theta: Theta, step: np.ndarray) -> Theta | None:
    mu, sigma, delta = np.asarray(theta.as_tuple()) + step
    if not np.all(np.isfinite([mu, sigma, delta])):
        return None
    return Theta(float(mu), max(float(sigma), SIGMA_FLOOR), max(float(delta), 0.0))


def _batch_losses(theta, env, cfg, pref, grid, rng) -> np.ndarray:
    losses = np.zeros(3)
    for _ in range(cfg.batch_size):
        path = simulate_wealth_theta(
            theta, env, pref, grid, cfg.x0, rng,
            jump_sampling=cfg.jump_sampling,
            jump_coupling=cfg.jump_coupling,
            compensate=cfg.compensate,
        )
        losses += oc_losses(path, theta, pref, cfg.T, cfg.test_variant)
    return losses / cfg.batch_size


def train_epoch(theta: Theta, env: tuple[MarketParams, JumpParams], cfg: RunConfig,
                epoch: int, rng: np.random.Generator) -> tuple[Theta, np.ndarray]:
    """One pass of the update loop; all coordinates use the pre-update theta."""
    pref = cfg.preferences
    grid = cfg.grid
    # overflow shows up as a non-finite update, which is reported below
    with np.errstate(over="ignore", invalid="ignore"):
        try:
            losses = _batch_losses(theta, env, cfg, pref, grid, rng)
        except OverflowError:
            losses = np.full(3, np.nan)
        rates = np.asarray(lr_schedule(epoch, cfg))
        updated = _apply_update(theta, rates * losses)
    if updated is None:
        raise TrainingDivergedError(
            f"non-finite theta at epoch {epoch}: theta={theta.as_tuple()}, losses={losses.tolist()}"
        )
    return updated, losses


def train(theta0: Theta, env: tuple[MarketParams, JumpParams], cfg: RunConfig) -> TrainTrace:
    trace = TrainTrace()
    theta = theta0
    for epoch in range(cfg.n_epochs):
        rng = path_rng(cfg.master_seed, STREAM_TRAIN, epoch)
        theta, losses = train_epoch(theta, env, cfg, epoch, rng)
        trace.records.append(EpochRecord(
            epoch, theta, tuple(float(v) for v in losses), lr_schedule(epoch, cfg)
        ))
        if epoch % 500 == 0:
            logger.debug("epoch %d theta=%s", epoch, theta.as_tuple())
    return trace
