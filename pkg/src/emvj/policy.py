"""Closed-form equilibrium policy, value functions and OC test functions.

With ``S = sigma^2 + delta^2`` the equilibrium policy is Gaussian with mean
``(mu - r) / (gamma S)`` and variance ``lambda / (gamma S)``, independent of
time and wealth.  The value function is ``V(t, x) = x + C(t)`` and the
expected terminal wealth is ``g(t, x) = x + h(t)``.
"""

from __future__ import annotations

import math

from .errors import InvalidParameterError
from .params import GaussianPolicy, JumpParams, PreferenceParams, Theta


def delta_squared_merton(jp: JumpParams) -> float:
    """Jump contribution to instantaneous return variance, integral of (e^z - 1)^2 nu(dz).

    For normal log-jumps this is ``zeta * (e^{2 mu_j + 2 sigma_j^2} - 2 e^{mu_j + sigma_j^2/2} + 1)``;
    written with expm1 to avoid cancellation when jumps are small.
    """
    second = math.expm1(2 * jp.mu_j + 2 * jp.sigma_j**2)
    first = math.expm1(jp.mu_j + 0.5 * jp.sigma_j**2)
    return max(jp.zeta * (second - 2 * first), 0.0)


def delta_merton(jp: JumpParams) -> float:
    return math.sqrt(delta_squared_merton(jp))


def _denominator(theta: Theta, pref: PreferenceParams) -> float:
    S = theta.total_variance
    if not S > 0:
        raise InvalidParameterError("sigma^2 + delta^2 must be > 0")
    if pref.gamma <= 0:
        raise InvalidParameterError("gamma must be > 0")
    return pref.gamma * S


def _log_term(theta: Theta, pref: PreferenceParams) -> float:
    # (lambda/2) log(2 pi lambda / (gamma S)), taken as 0 at lambda = 0
    if pref.lam == 0:
        return 0.0
    return 0.5 * pref.lam * math.log(2 * math.pi * pref.lam / _denominator(theta, pref))


def equilibrium_policy(theta: Theta, pref: PreferenceParams) -> GaussianPolicy:
    gS = _denominator(theta, pref)
    return GaussianPolicy(mean=(theta.mu - pref.r) / gS, variance=pref.lam / gS)


def value_C(t: float, theta: Theta, pref: PreferenceParams, T: float) -> float:
    """Time part of the value function, V(t, x) = x + C(t)."""
    _check_time(t, T)
    gS = _denominator(theta, pref)
    excess = theta.mu - pref.r
    return (T - t) * (excess**2 / (2 * gS) + _log_term(theta, pref))


def aux_h(t: float, theta: Theta, pref: PreferenceParams, T: float) -> float:
    """Time part of the expected terminal wealth, g(t, x) = x + h(t)."""
    _check_time(t, T)
    gS = _denominator(theta, pref)
    return (T - t) * (theta.mu - pref.r) ** 2 / gS


def value_V(t: float, x: float, theta: Theta, pref: PreferenceParams, T: float) -> float:
    return x + value_C(t, theta, pref, T)


def aux_g(t: float, x: float, theta: Theta, pref: PreferenceParams, T: float) -> float:
    return x + aux_h(t, theta, pref, T)


def policy_entropy(pol: GaussianPolicy) -> float:
    """Differential entropy of the Gaussian policy, 0.5 * log(2 pi e var)."""
    if pol.variance <= 0:
        raise InvalidParameterError("entropy needs a strictly positive policy variance")
    return 0.5 * math.log(2 * math.pi * math.e * pol.variance)


def test_function_coefficients(
    theta: Theta, pref: PreferenceParams, variant: str = "printed"
) -> tuple[float, float, float]:
    """Return k_j with dV/dtheta_j (t) = (T - t) * k_j.

    ``variant="printed"`` keeps the extra (lambda/2) log(...) summand in the
    mu-coordinate; ``variant="analytic"`` uses the exact derivative of C.
    The sigma and delta coordinates are the exact derivatives in both cases.
    """
    gS = _denominator(theta, pref)
    S = theta.total_variance
    excess = theta.mu - pref.r
    if variant == "printed":
        k_mu = excess / gS + _log_term(theta, pref)
    elif variant == "analytic":
        k_mu = excess / gS
    else:
        raise ValueError(f"unknown test-function variant {variant!r}")
    common = excess**2 / (gS * S) + pref.lam / S
    return (k_mu, -common * theta.sigma, -common * theta.delta)


def test_functions(
    t: float, theta: Theta, pref: PreferenceParams, T: float, variant: str = "printed"
) -> tuple[float, float, float]:
    """(dV/dmu, dV/dsigma, dV/ddelta) at time t; wealth does not enter."""
    _check_time(t, T)
    k = test_function_coefficients(theta, pref, variant)
    return tuple((T - t) * kj for kj in k)


def _check_time(t: float, T: float) -> None:
    if not (0 <= t <= T):
        raise InvalidParameterError(f"time {t} outside [0, {T}]")
