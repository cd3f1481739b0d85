"""Derivative-free Nelder-Mead minimizer."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InvalidParameterError

REFLECT, EXPAND, CONTRACT, SHRINK = 1.0, 2.0, 0.5, 0.5


@dataclass(frozen=True)
class SimplexOptions:
    max_iters: int = 5000
    x_tol: float = 1e-8
    f_tol: float = 1e-12
    initial_step: float = 0.1


@dataclass(frozen=True)
class SimplexResult:
    x: np.ndarray
    fun: float
    iterations: int
    converged: bool
    reason: str


def nelder_mead(objective: Callable[[np.ndarray], float], x0, opts: SimplexOptions | None = None) -> SimplexResult:
    """Minimize ``objective`` from ``x0``.

    Stops when the simplex diameter (max vertex distance from the best vertex)
    drops below ``x_tol``, when the spread of function values drops below
    ``f_tol``, or after ``max_iters`` iterations (reported as not converged).
    Non-finite objective values are treated as +inf.
    """
    opts = opts or SimplexOptions()
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    n = x0.size

    def f(x):
        value = float(objective(x))
        return value if np.isfinite(value) else np.inf

    f0 = f(x0)
    if not np.isfinite(f0):
        raise InvalidParameterError("objective is not finite at the starting point")

    simplex = np.vstack([x0, x0 + opts.initial_step * np.eye(n)])
    values = np.array([f0] + [f(v) for v in simplex[1:]])

    iterations = 0
    reason = "max_iters"
    converged = False
    while True:
        order = np.argsort(values, kind="stable")
        simplex, values = simplex[order], values[order]

        diameter = np.max(np.linalg.norm(simplex[1:] - simplex[0], axis=1))
        spread = values[-1] - values[0]
        if diameter < opts.x_tol:
            converged, reason = True, "x_tol"
            break
        if spread < opts.f_tol:
            converged, reason = True, "f_tol"
            break
        if iterations >= opts.max_iters:
            break
        iterations += 1

        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        xr = centroid + REFLECT * (centroid - worst)
        fr = f(xr)
        if fr < values[0]:
            xe = centroid + EXPAND * (xr - centroid)
            fe = f(xe)
            if fe < fr:
                simplex[-1], values[-1] = xe, fe
            else:
                simplex[-1], values[-1] = xr, fr
            continue
        if fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
            continue

        if fr < values[-1]:
            xc = centroid + CONTRACT * (xr - centroid)  # outside
            fc = f(xc)
            accept = fc <= fr
        else:
            xc = centroid + CONTRACT * (worst - centroid)  # inside
            fc = f(xc)
            accept = fc < values[-1]
        if accept:
            simplex[-1], values[-1] = xc, fc
            continue

        best = simplex[0]
        simplex[1:] = best + SHRINK * (simplex[1:] - best)
        values[1:] = [f(v) for v in simplex[1:]]

    return SimplexResult(simplex[0].copy(), float(values[0]), iterations, converged, reason)
