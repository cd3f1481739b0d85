"""Parameter containers shared across the simulation, policy and training code."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidParameterError


def _finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise InvalidParameterError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class MarketParams:
    """Drift and diffusion volatility of the stock (annualized)."""

    mu: float
    sigma: float

    def __post_init__(self):
        _finite("mu", self.mu)
        _finite("sigma", self.sigma)
        if self.sigma < 0:
            raise InvalidParameterError(f"sigma must be >= 0, got {self.sigma}")


@dataclass(frozen=True)
class JumpParams:
    """Merton jump law: Poisson rate ``zeta`` and normal log-jump sizes N(mu_j, sigma_j^2)."""

    zeta: float
    mu_j: float
    sigma_j: float

    def __post_init__(self):
        for name in ("zeta", "mu_j", "sigma_j"):
            _finite(name, getattr(self, name))
        if self.zeta < 0:
            raise InvalidParameterError(f"zeta must be >= 0, got {self.zeta}")
        if self.sigma_j < 0:
            raise InvalidParameterError(f"sigma_j must be >= 0, got {self.sigma_j}")
        # second moment of e^Z must exist for E[S_t^2] < inf
        if not math.isfinite(math.exp(2 * self.mu_j + 2 * self.sigma_j**2)):
            raise InvalidParameterError("jump law has no finite second moment")

    @property
    def kappa(self) -> float:
        """Mean relative jump size E[e^Z - 1]."""
        return math.expm1(self.mu_j + 0.5 * self.sigma_j**2)


NO_JUMPS = JumpParams(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class Theta:
    """Learned triple (mu, sigma, delta); delta is the aggregated jump scale."""

    mu: float
    sigma: float
    delta: float

    def __post_init__(self):
        for name in ("mu", "sigma", "delta"):
            _finite(name, getattr(self, name))
        if not self.sigma**2 + self.delta**2 > 0:
            raise InvalidParameterError("theta needs sigma^2 + delta^2 > 0")

    @property
    def total_variance(self) -> float:
        return self.sigma**2 + self.delta**2

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.mu, self.sigma, self.delta)


@dataclass(frozen=True)
class PreferenceParams:
    gamma: float
    lam: float
    r: float = 0.0

    def __post_init__(self):
        for name in ("gamma", "lam", "r"):
            _finite(name, getattr(self, name))
        if self.gamma <= 0:
            raise InvalidParameterError(f"gamma must be > 0, got {self.gamma}")
        if self.lam < 0:
            raise InvalidParameterError(f"lambda must be >= 0, got {self.lam}")


@dataclass(frozen=True)
class GaussianPolicy:
    """State-independent Gaussian distribution over the dollar amount held in the stock."""

    mean: float
    variance: float

    def __post_init__(self):
        if self.variance < 0:
            raise InvalidParameterError(f"policy variance must be >= 0, got {self.variance}")

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)

    @classmethod
    def point_mass(cls, u: float) -> GaussianPolicy:
        return cls(u, 0.0)


# Values used throughout the simulation study (S&P 500 total-return fit).
REFERENCE_MARKET = MarketParams(mu=0.0878, sigma=0.1321)
REFERENCE_JUMPS = JumpParams(zeta=27.6813, mu_j=-0.0040, sigma_j=0.0274)
REFERENCE_THETA0 = Theta(0.1, 0.1, 0.05)
