"""Maximum-likelihood calibration of the Merton jump-diffusion to log-returns.

The return density over one interval ``dt`` is the Poisson mixture

    f(r) = sum_m p_m * phi(r; nu_m, tau_m^2),  p_m = e^{-zeta dt} (zeta dt)^m / m!
    nu_m = (mu - sigma^2/2 - zeta kappa) dt + m mu_j,  tau_m^2 = sigma^2 dt + m sigma_j^2

truncated at ``m_max`` jumps per interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp
from scipy.stats import poisson

from .errors import InvalidParameterError
from .market import STREAM_MLE, path_rng
from .params import JumpParams, MarketParams
from .policy import delta_squared_merton
from .simplex import SimplexOptions, nelder_mead

PARAM_KEYS = ("mu", "sigma", "zeta", "mu_j", "sigma_j")


@dataclass(frozen=True)
class MertonParams:
    mu: float
    sigma: float
    zeta: float
    mu_j: float
    sigma_j: float

    def __post_init__(self):
        if not all(math.isfinite(getattr(self, k)) for k in PARAM_KEYS):
            raise InvalidParameterError("Merton parameters must be finite")
        if self.sigma <= 0 or self.sigma_j <= 0 or self.zeta <= 0:
            raise InvalidParameterError("sigma, sigma_j and zeta must be > 0")

    @property
    def market(self) -> MarketParams:
        return MarketParams(self.mu, self.sigma)

    @property
    def jumps(self) -> JumpParams:
        return JumpParams(self.zeta, self.mu_j, self.sigma_j)

    @property
    def delta(self) -> float:
        return math.sqrt(delta_squared_merton(self.jumps))

    def to_vector(self) -> np.ndarray:
        """Unconstrained coordinates (mu, log sigma, log zeta, mu_j, log sigma_j)."""
        return np.array([self.mu, math.log(self.sigma), math.log(self.zeta),
                         self.mu_j, math.log(self.sigma_j)])

    @classmethod
    def from_vector(cls, v) -> MertonParams:
        mu, log_s, log_z, mu_j, log_sj = (float(x) for x in v)
        return cls(mu, math.exp(log_s), math.exp(log_z), mu_j, math.exp(log_sj))


@dataclass(frozen=True)
class ReturnSeries:
    returns: np.ndarray
    dt: float

    def __post_init__(self):
        if not self.dt > 0:
            raise InvalidParameterError("dt must be > 0")
        if not np.all(np.isfinite(self.returns)):
            raise InvalidParameterError("returns must be finite")

    def __len__(self) -> int:
        return len(self.returns)


@dataclass
class FitResult:
    params: MertonParams
    loglik: float
    converged: bool
    diagnostics: dict = field(default_factory=dict)

    def to_text(self) -> str:
        p = self.params
        lines = [f"{k} = {getattr(p, k)!r}" for k in PARAM_KEYS]
        lines.append(f"loglik = {self.loglik!r}")
        lines.append(f"converged = {str(self.converged).lower()}")
        return "\n".join(lines) + "\n"


def log_returns(prices, dt: float) -> ReturnSeries:
    prices = np.asarray(prices, dtype=float)
    if prices.ndim != 1 or prices.size < 2:
        raise InvalidParameterError("need at least two prices")
    if not np.all(prices > 0):
        raise InvalidParameterError("prices must be > 0")
    return ReturnSeries(np.diff(np.log(prices)), dt)


def _component_log_terms(ret: np.ndarray, p: MertonParams, dt: float, m_max: int) -> np.ndarray:
    if m_max < 0:
        raise InvalidParameterError("m_max must be >= 0")
    m = np.arange(m_max + 1)[:, None]
    lam_dt = p.zeta * dt
    log_pm = -lam_dt + m * math.log(lam_dt) - gammaln(m + 1)
    kappa = math.expm1(p.mu_j + 0.5 * p.sigma_j**2)
    nu = (p.mu - 0.5 * p.sigma**2 - p.zeta * kappa) * dt + m * p.mu_j
    tau2 = p.sigma**2 * dt + m * p.sigma_j**2
    log_phi = -0.5 * (np.log(2 * math.pi * tau2) + (ret[None, :] - nu) ** 2 / tau2)
    return log_pm + log_phi


def merton_density(ret, p: MertonParams, dt: float, m_max: int = 2):
    """Truncated mixture density at ``ret`` (scalar or array)."""
    r = np.atleast_1d(np.asarray(ret, dtype=float))
    out = np.exp(_component_log_terms(r, p, dt, m_max)).sum(axis=0)
    return float(out[0]) if np.ndim(ret) == 0 else out


def log_likelihood(p: MertonParams, rs: ReturnSeries, m_max: int = 2) -> float:
    if len(rs) == 0:
        raise InvalidParameterError("empty return series")
    per_obs = logsumexp(_component_log_terms(np.asarray(rs.returns), p, rs.dt, m_max), axis=0)
    total = float(per_obs.sum())
    return total if math.isfinite(total) else -math.inf


def truncation_mass(zeta: float, dt: float, m_max: int) -> float:
    """Poisson probability of more than ``m_max`` jumps in one interval."""
    return float(poisson.sf(m_max, zeta * dt))


def default_init(rs: ReturnSeries) -> MertonParams:
    """Moment-based starting point: diffusion from the robust scale, jumps ~3 daily s.d."""
    r = np.asarray(rs.returns)
    mad = np.median(np.abs(r - np.median(r))) * 1.4826
    sd = float(np.std(r)) or 1e-4
    daily = mad if mad > 0 else sd
    sigma = daily / math.sqrt(rs.dt)
    mu = float(np.mean(r)) / rs.dt + 0.5 * sigma**2
    return MertonParams(mu=mu, sigma=sigma, zeta=10.0, mu_j=0.0, sigma_j=3 * daily)


def fit(rs: ReturnSeries, init: MertonParams | None = None, m_max: int = 2,
        opts: SimplexOptions | None = None, restarts: int = 1, seed: int = 0) -> FitResult:
    """Minimize the negative log-likelihood over (mu, log sigma, log zeta, mu_j, log sigma_j).

    With ``restarts > 1`` additional searches start from jittered copies of
    ``init`` and the best result is kept.
    """
    if len(rs) < 2:
        raise InvalidParameterError("need at least two returns to fit")
    init = init or default_init(rs)
    opts = opts or SimplexOptions(max_iters=4000, x_tol=1e-7, f_tol=1e-9)

    def objective(v):
        try:
            p = MertonParams.from_vector(v)
        except (InvalidParameterError, OverflowError):
            return math.inf
        return -log_likelihood(p, rs, m_max)

    start = init.to_vector()
    loglik_init = log_likelihood(init, rs, m_max)
    best = nelder_mead(objective, start, opts)
    rng = path_rng(seed, STREAM_MLE, 0)
    for _ in range(restarts - 1):
        jitter = start + rng.normal(0.0, 0.25, start.size)
        if not math.isfinite(objective(jitter)):
            continue
        cand = nelder_mead(objective, jitter, opts)
        if cand.fun < best.fun:
            best = cand
    params = MertonParams.from_vector(best.x)
    return FitResult(
        params=params,
        loglik=-best.fun,
        converged=best.converged,
        diagnostics={
            "iterations": best.iterations,
            "reason": best.reason,
            "loglik_init": loglik_init,
            "n_returns": len(rs),
        },
    )
