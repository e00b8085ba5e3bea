"""The scalar objective minimized in the reduced subspace."""
from __future__ import annotations

import numpy as np

from .core import Array, Problem
from .pod import PodBasis, reconstruct


def r_total(field: Array) -> float:
    """Root-mean-square of the per-cell residual norms.

    ``sqrt(sum_m |R_m|^2 / n_cells)`` where the first axis of ``field``
    indexes cells.  Any non-finite component maps to +inf so the optimizer
    treats blown-up states as worst-possible rather than crashing.
    """
    field = np.asarray(field, dtype=float)
    if field.size == 0:
        raise ValueError("empty residual field")
    if not np.all(np.isfinite(field)):
        return float("inf")
    with np.errstate(over="ignore"):
        return float(np.sqrt(np.sum(field * field) / field.shape[0]))


def problem_r_total(problem: Problem, state: Array) -> float:
    """r_total of a problem's residual at ``state``; +inf for non-finite states."""
    state = np.asarray(state, dtype=float)
    if not np.all(np.isfinite(state)):
        return float("inf")
    with np.errstate(over="ignore", invalid="ignore"):
        return r_total(problem.residual(state))


class Objective:
    """Residual norm as a function of mode coefficients.

    Each call reconstructs the full state from the coefficients, evaluates
    the problem residual without advancing the solver, and returns its RMS
    norm.  The instance counts its evaluations and remembers the best point
    seen, so a caller can recover it even if the optimizer's final simplex
    ended up somewhere worse.
    """

    def __init__(self, problem: Problem, basis: PodBasis):
        self.problem = problem
        self.basis = basis
        self.eval_count = 0
        self.best_xi: Array | None = None
        self.best_value = float("inf")

    @property
    def best_seen(self) -> tuple[Array | None, float]:
        return self.best_xi, self.best_value

    def evaluate(self, xi: Array) -> float:
        with np.errstate(over="ignore", invalid="ignore"):
            state = reconstruct(self.basis, xi)
        value = problem_r_total(self.problem, state)
        self.eval_count += 1
        if self.best_xi is None or value < self.best_value:
            self.best_xi = np.array(xi, dtype=float, copy=True)
            self.best_value = value
        return value

    __call__ = evaluate
