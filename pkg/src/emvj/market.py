"""Merton jump-diffusion stock paths and wealth processes on a uniform grid.

Every simulator takes a ``numpy.random.Generator`` and draws its randomness in
a fixed order (Brownian increments, then jump counts, then jump sizes, then
policy draws), so a given generator state always reproduces the same path.
Multi-path helpers derive one generator per path from ``(seed, stream, index)``
with :func:`path_rng`, which keeps path ``i`` identical whatever the batch size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import InvalidParameterError
from .params import GaussianPolicy, JumpParams, MarketParams, PreferenceParams, Theta
from .policy import equilibrium_policy

JUMP_SAMPLING = ("per_step", "per_path")
JUMP_COUPLING = ("mean", "quantile")

# RNG stream tags, kept disjoint so evaluation never reuses training noise.
STREAM_TRAIN = 1
STREAM_EVAL = 2
STREAM_SIMULATE = 3
STREAM_DATA = 4
STREAM_MLE = 5


def path_rng(seed: int, stream: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(stream), int(index)]))


def path_rngs(seed: int, stream: int, n: int) -> Iterator[np.random.Generator]:
    for i in range(n):
        yield path_rng(seed, stream, i)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t0, t0 + dt, ..., t0 + T with ``dt = T / n_steps``."""

    T: float
    n_steps: int
    t0: float = 0.0

    def __post_init__(self):
        if self.n_steps < 1:
            raise InvalidParameterError("a grid needs at least one step")
        if not self.T > 0:
            raise InvalidParameterError("horizon must be > 0")

    @classmethod
    def from_dt(cls, T: float, dt: float, t0: float = 0.0) -> TimeGrid:
        if not dt > 0:
            raise InvalidParameterError("dt must be > 0")
        n = int(round(T / dt))
        if n < 1 or abs(n * dt - T) > 1e-9 * max(1.0, T):
            raise InvalidParameterError(f"T={T} is not an integer multiple of dt={dt}")
        return cls(T, n, t0)

    @property
    def dt(self) -> float:
        return self.T / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_steps + 1)


@dataclass(frozen=True)
class PathGrid:
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if len(self.times) != len(self.values):
            raise InvalidParameterError("times and values differ in length")
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise InvalidParameterError("times must be strictly increasing")

    @property
    def terminal(self) -> float:
        return float(self.values[-1])


@dataclass(frozen=True)
class StepNoise:
    """Per-step randomness shared by the stock and wealth simulators.

    ``jump_step[k]`` is the step in which jump ``k`` (log-size ``log_jumps[k]``)
    lands; ``compensator[n]`` is the expected relative jump mass removed in
    step ``n`` (zeta * dt * kappa, or 0 when compensation is off).
    """

    dW: np.ndarray
    counts: np.ndarray
    log_jumps: np.ndarray
    jump_step: np.ndarray
    compensator: np.ndarray

    @property
    def n_steps(self) -> int:
        return len(self.dW)

    def log_jump_sum(self) -> np.ndarray:
        return np.bincount(self.jump_step, weights=self.log_jumps, minlength=self.n_steps)

    def relative_jump_sum(self, weights: np.ndarray | float = 1.0) -> np.ndarray:
        rel = np.expm1(self.log_jumps) * weights
        return np.bincount(self.jump_step, weights=rel, minlength=self.n_steps)


def sample_jump_increment(jp: JumpParams, dt: float, rng: np.random.Generator) -> tuple[int, float, float]:
    """One step of the jump part: (count, product of e^Z, compensated sum of e^Z - 1)."""
    if not dt > 0:
        raise InvalidParameterError("dt must be > 0")
    if jp.zeta == 0:
        return 0, 1.0, 0.0
    count = int(rng.poisson(jp.zeta * dt))
    z = rng.normal(jp.mu_j, jp.sigma_j, count)
    total_mult = float(np.exp(z.sum()))
    compensated = float(np.expm1(z).sum()) - jp.zeta * dt * jp.kappa
    return count, total_mult, compensated


def draw_step_noise(
    jp: JumpParams,
    grid: TimeGrid,
    rng: np.random.Generator,
    jump_sampling: str = "per_step",
    compensate: bool = True,
) -> StepNoise:
    """Draw Brownian increments and jumps for every step of ``grid``.

    ``per_step`` gives each step its own Poisson(zeta dt) count.  ``per_path``
    draws a single Poisson(zeta dt) count for the whole path and places it
    (with its compensator) in one uniformly chosen step; this is the literal
    reading of the training loop and carries almost no jump variance.
    """
    if jump_sampling not in JUMP_SAMPLING:
        raise InvalidParameterError(f"jump_sampling must be one of {JUMP_SAMPLING}")
    n, dt = grid.n_steps, grid.dt
    dW = rng.standard_normal(n) * math.sqrt(dt)
    comp_rate = jp.zeta * dt * jp.kappa if compensate else 0.0
    if jump_sampling == "per_step":
        counts = rng.poisson(jp.zeta * dt, n) if jp.zeta > 0 else np.zeros(n, dtype=np.int64)
        compensator = np.full(n, comp_rate)
    else:
        counts = np.zeros(n, dtype=np.int64)
        compensator = np.zeros(n)
        if jp.zeta > 0:
            where = int(rng.integers(n))
            counts[where] = rng.poisson(jp.zeta * dt)
            compensator[where] = comp_rate
    total = int(counts.sum())
    log_jumps = rng.normal(jp.mu_j, jp.sigma_j, total) if total else np.zeros(0)
    jump_step = np.repeat(np.arange(n), counts)
    return StepNoise(dW, counts, log_jumps, jump_step, compensator)


def simulate_stock_path(
    mp: MarketParams,
    jp: JumpParams,
    grid: TimeGrid,
    s0: float,
    rng: np.random.Generator,
    jump_sampling: str = "per_step",
    compensate: bool = True,
    noise: StepNoise | None = None,
) -> PathGrid:
    """Exact log-scheme for dS/S- = mu dt + sigma dW + int (e^z - 1) N~(dt, dz)."""
    if not s0 > 0:
        raise InvalidParameterError("s0 must be > 0")
    if noise is None:
        noise = draw_step_noise(jp, grid, rng, jump_sampling, compensate)
    log_inc = (
        (mp.mu - 0.5 * mp.sigma**2) * grid.dt
        + mp.sigma * noise.dW
        - noise.compensator
        + noise.log_jump_sum()
    )
    log_path = np.concatenate(([0.0], np.cumsum(log_inc)))
    return PathGrid(grid.times, s0 * np.exp(log_path))


def theta_wealth_coefficients(
    theta: Theta, mp: MarketParams, pref: PreferenceParams
) -> tuple[float, float, float]:
    """Drift a, Brownian loading b and jump loading c of the wealth SDE under pi^theta."""
    pol = equilibrium_policy(theta, pref)
    a = (mp.mu - pref.r) * pol.mean
    b = math.sqrt(mp.sigma**2 * (pol.variance + pol.mean**2))
    return a, b, pol.mean


def simulate_wealth_theta(
    theta: Theta,
    env: tuple[MarketParams, JumpParams],
    pref: PreferenceParams,
    grid: TimeGrid,
    x0: float,
    rng: np.random.Generator,
    jump_sampling: str = "per_step",
    jump_coupling: str = "mean",
    compensate: bool = True,
) -> PathGrid:
    """Euler scheme for the wealth process when following pi^theta.

    ``jump_coupling="mean"`` loads every jump with the policy mean only, as in
    the closed-form wealth SDE.  ``"quantile"`` gives each jump its own draw
    u ~ pi^theta, so jumps also carry the exploration variance; the jump term
    then has quadratic variation E[u^2] delta^2 dt, which is what makes the OC
    process a martingale at the true parameters.
    """
    if jump_coupling not in JUMP_COUPLING:
        raise InvalidParameterError(f"jump_coupling must be one of {JUMP_COUPLING}")
    mp, jp = env
    a, b, c = theta_wealth_coefficients(theta, mp, pref)
    noise = draw_step_noise(jp, grid, rng, jump_sampling, compensate)
    if jump_coupling == "mean":
        jumps = c * (noise.relative_jump_sum() - noise.compensator)
    else:
        pol = equilibrium_policy(theta, pref)
        u = pol.mean + pol.std * rng.standard_normal(len(noise.log_jumps))
        jumps = noise.relative_jump_sum(u) - c * noise.compensator
    inc = a * grid.dt + b * noise.dW + jumps
    return PathGrid(grid.times, x0 + np.concatenate(([0.0], np.cumsum(inc))))


def simulate_wealth_sampled(
    policy: GaussianPolicy,
    env: tuple[MarketParams, JumpParams],
    pref: PreferenceParams,
    grid: TimeGrid,
    x0: float,
    rng: np.random.Generator,
    jump_sampling: str = "per_step",
    compensate: bool = True,
) -> PathGrid:
    """Wealth when a fresh u ~ policy is invested at every step (one draw per step)."""
    mp, jp = env
    noise = draw_step_noise(jp, grid, rng, jump_sampling, compensate)
    u = policy.mean + policy.std * rng.standard_normal(grid.n_steps)
    jumps = noise.relative_jump_sum() - noise.compensator
    inc = u * ((mp.mu - pref.r) * grid.dt + mp.sigma * noise.dW + jumps)
    return PathGrid(grid.times, x0 + np.concatenate(([0.0], np.cumsum(inc))))
