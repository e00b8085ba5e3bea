"""Budgeted derivative-free simplex minimization.

Nelder-Mead with the dimension-adaptive reflection/expansion/contraction/
shrink coefficients.  The hard evaluation budget is the defining constraint:
the loop never issues more objective calls than allowed, and it returns the
best point seen anywhere along the way rather than the final simplex best,
so the result can never be worse than the starting point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .core import Array, ConfigurationError

SPREAD_TOL = 1e-15
DIAMETER_TOL = 1e-14


@dataclass(frozen=True)
class NmParams:
    """Reflection, expansion, contraction, and shrink coefficients."""

    alpha: float
    beta: float
    gamma: float
    delta: float

    def __post_init__(self) -> None:
        if not (self.alpha > 0 and self.beta > 1 and 0 < self.gamma < 1 and 0 < self.delta < 1):
            raise ConfigurationError(f"invalid simplex coefficients {self}")


def adaptive_params(dim: int) -> NmParams:
    """Dimension-adaptive simplex coefficients.

    alpha = 1, beta = 1 + 2/dim, gamma = 0.75 - 1/(2 dim), delta = 1 - 1/dim;
    in one dimension the shrink factor degenerates to 0 and is clamped to 0.5.
    """
    if dim < 1:
        raise ConfigurationError("dimension must be at least 1")
    delta = 0.5 if dim == 1 else 1.0 - 1.0 / dim
    return NmParams(alpha=1.0, beta=1.0 + 2.0 / dim, gamma=0.75 - 0.5 / dim, delta=delta)


def initial_simplex(xi0: Array, scale_guards: Array | None = None) -> Array:
    """Starting simplex around ``xi0``, one vertex per coordinate.

    Vertex i perturbs coordinate i by 5% of the largest of |xi0_i|, the
    coordinate's scale guard, and an absolute floor of 1e-8.  The step is
    taken away from zero so multiplicative structure in the coefficients is
    preserved.  Scale guards are typically the singular-value ratios of the
    basis, tying each perturbation to the energy of its mode.
    """
    xi0 = np.asarray(xi0, dtype=float)
    dim = xi0.size
    if scale_guards is None:
        guards = np.ones(dim)
    else:
        guards = np.broadcast_to(np.asarray(scale_guards, dtype=float), (dim,))
    simplex = np.tile(xi0, (dim + 1, 1))
    for i in range(dim):
        h = 0.05 * max(abs(xi0[i]), abs(guards[i]), 1e-8)
        simplex[i + 1, i] += h if xi0[i] >= 0 else -h
    return simplex


class MinimizeResult(NamedTuple):
    x: Array
    fun: float
    n_evals: int


def _sanitize(value: float) -> float:
    value = float(value)
    return float("inf") if math.isnan(value) else value


def minimize(fun: Callable[[Array], float], xi0: Array, budget: int,
             scale_guards: Array | None = None) -> MinimizeResult:
    """Minimize ``fun`` from ``xi0`` within an exact evaluation budget.

    The starting point is always evaluated first, so the returned value is
    never worse than ``fun(xi0)``.  Non-finite objective values are legal and
    are simply ranked worst, which lets the simplex contract away from
    blown-up regions.  Terminates on budget exhaustion, on a value spread
    below ``SPREAD_TOL * (1 + |f_best|)``, or on a simplex diameter below
    ``DIAMETER_TOL * (1 + |x_best|)``.
    """
    xi0 = np.asarray(xi0, dtype=float)
    dim = xi0.size
    if dim < 1:
        raise ConfigurationError("cannot optimize a zero-dimensional space")
    if budget < dim + 2:
        raise ConfigurationError(
            f"budget {budget} below the {dim + 2} evaluations needed for a simplex"
        )
    params = adaptive_params(dim)

    tracker = {"n": 0, "x": None, "f": float("inf")}

    def call(x: Array) -> float:
        value = _sanitize(fun(x))
        tracker["n"] += 1
        if tracker["x"] is None or value < tracker["f"]:
            tracker["x"] = np.array(x, copy=True)
            tracker["f"] = value
        return value

    def remaining() -> int:
        return budget - tracker["n"]

    simplex = initial_simplex(xi0, scale_guards)
    values = np.array([call(simplex[i]) for i in range(dim + 1)])

    while remaining() > 0:
        order = np.argsort(values, kind="stable")
        simplex, values = simplex[order], values[order]

        f_best = values[0]
        if math.isfinite(values[-1]) and values[-1] - f_best <= SPREAD_TOL * (1.0 + abs(f_best)):
            break
        diameter = max(float(np.linalg.norm(simplex[i] - simplex[0]))
                       for i in range(1, dim + 1))
        if diameter <= DIAMETER_TOL * (1.0 + float(np.linalg.norm(simplex[0]))):
            break

        centroid = simplex[:-1].mean(axis=0)
        reflected = centroid + params.alpha * (centroid - simplex[-1])
        f_reflected = call(reflected)

        if f_reflected < values[0] and remaining() > 0:
            expanded = centroid + params.beta * (reflected - centroid)
            f_expanded = call(expanded)
            if f_expanded < f_reflected:
                simplex[-1], values[-1] = expanded, f_expanded
            else:
                simplex[-1], values[-1] = reflected, f_reflected
        elif f_reflected < values[-2]:
            simplex[-1], values[-1] = reflected, f_reflected
        else:
            if remaining() <= 0:
                break
            if f_reflected < values[-1]:
                contracted = centroid + params.gamma * (reflected - centroid)
                f_contracted = call(contracted)
                accept = f_contracted <= f_reflected
            else:
                contracted = centroid - params.gamma * (centroid - simplex[-1])
                f_contracted = call(contracted)
                accept = f_contracted < values[-1]
            if accept:
                simplex[-1], values[-1] = contracted, f_contracted
            else:
                for i in range(1, dim + 1):
                    if remaining() <= 0:
                        break
                    simplex[i] = simplex[0] + params.delta * (simplex[i] - simplex[0])
                    values[i] = call(simplex[i])

    return MinimizeResult(x=tracker["x"], fun=tracker["f"], n_evals=tracker["n"])
