"""Linear stability verification of converged states.

After a run lands on a steady state, the residual Jacobian (or the step-map
Jacobian) is linearized by central differences and its leading eigenvalues
are inspected.  An unstable classification confirms the recovered state is
one a plain iteration would have fled from.  Small systems use a dense
eigensolve; larger ones fall back to a restarted Krylov iteration on a
shifted matrix so only matrix products are needed.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import Array, ConfigurationError, OdroError, Problem

REAL_PART_TOL = 1e-8
MODULUS_TOL = 1e-8
DENSE_LIMIT = 512


class Classification(Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    MARGINAL = "marginal"


@dataclass(frozen=True)
class SpectrumReport:
    """Leading eigenvalues plus their stability verdict.

    ``kind`` records which linearization the eigenvalues belong to:
    "residual" (continuous-time convention, unstable when a real part is
    positive) or "step" (map convention, unstable when a modulus exceeds 1).
    """

    leading_eigenvalues: tuple[complex, ...]
    classification: Classification
    kind: str
    fd_epsilon: float | None = None
    diagnostic: str | None = None


def spectral_radius(A: Array) -> float:
    """Largest eigenvalue modulus of a dense matrix."""
    return float(np.max(np.abs(np.linalg.eigvals(np.asarray(A, dtype=float)))))


def jacobian_fd(problem: Problem, state: Array, eps: float | None = None,
                of: str = "residual") -> Array:
    """Central-difference Jacobian of the flattened residual (or step map).

    Column j is (f(u + eps e_j) - f(u - eps e_j)) / (2 eps).  The default
    perturbation is sqrt(machine epsilon) * (1 + |state|_inf).
    """
    state = np.asarray(state, dtype=float)
    if not np.all(np.isfinite(state)):
        raise ConfigurationError("cannot linearize at a non-finite state")
    if of == "residual":
        func = lambda u: np.asarray(problem.residual(u), dtype=float).ravel()
    elif of == "step":
        func = lambda u: np.asarray(problem.step(u), dtype=float).ravel()
    else:
        raise ConfigurationError(f"unknown linearization target {of!r}")
    if eps is None:
        eps = np.sqrt(np.finfo(float).eps) * (1.0 + float(np.max(np.abs(state))))
    if not eps > 0:
        raise ConfigurationError("eps must be positive")

    n = state.size
    m = func(state).size
    J = np.empty((m, n))
    for j in range(n):
        bump = np.zeros(n)
        bump[j] = eps
        plus = func(state + bump)
        minus = func(state - bump)
        if not (np.all(np.isfinite(plus)) and np.all(np.isfinite(minus))):
            raise OdroError(f"non-finite residual while perturbing column {j}")
        J[:, j] = (plus - minus) / (2.0 * eps)
    return J


def _classify(eigs: np.ndarray, kind: str) -> Classification:
    if kind == "residual":
        top = float(np.max(eigs.real))
        if top > REAL_PART_TOL:
            return Classification.UNSTABLE
        if top < -REAL_PART_TOL:
            return Classification.STABLE
        return Classification.MARGINAL
    top = float(np.max(np.abs(eigs)))
    if top > 1.0 + MODULUS_TOL:
        return Classification.UNSTABLE
    if top < 1.0 - MODULUS_TOL:
        return Classification.STABLE
    return Classification.MARGINAL


def _order(eigs: np.ndarray, kind: str) -> np.ndarray:
    key = eigs.real if kind == "residual" else np.abs(eigs)
    return eigs[np.argsort(key)[::-1]]


def _arnoldi_ritz(op, n: int, m: int, v: Array,
                  order_key) -> tuple[np.ndarray, np.ndarray, np.ndarray, float, int]:
    """One Arnoldi sweep; returns ordered Ritz values/vectors and residuals."""
    V = np.zeros((n, m + 1))
    H = np.zeros((m + 1, m))
    V[:, 0] = v
    width = m
    for j in range(m):
        w = op(V[:, j])
        for i in range(j + 1):
            H[i, j] = V[:, i] @ w
            w -= H[i, j] * V[:, i]
        H[j + 1, j] = np.linalg.norm(w)
        if H[j + 1, j] < 1e-300:
            width = j + 1
            break
        V[:, j + 1] = w / H[j + 1, j]
    theta, Y = np.linalg.eig(H[:width, :width])
    order = np.argsort(order_key(theta))[::-1]
    theta, Y = theta[order], Y[:, order]
    beta = 0.0 if width < m else float(H[width, width - 1])
    return theta, Y, V[:, :width], beta, width


def _arnoldi_leading(J: Array, k: int, kind: str, seed: int,
                     max_restarts: int = 40) -> tuple[np.ndarray, str | None]:
    """Restarted Krylov estimate of the k leading eigenvalues.

    For the residual convention (largest real part wanted) the iteration runs
    on the shift-inverted operator (sigma I - J)^-1 with sigma a Gershgorin
    upper bound of the spectrum, which turns "closest to sigma from below"
    into "largest magnitude" where Krylov convergence is fast even for stiff
    dissipative spectra.  For the step convention the wanted eigenvalues are
    the largest in modulus already and J is iterated directly.  Returns
    (eigenvalues, diagnostic); the diagnostic is set when the Ritz residual
    test never passed.
    """
    n = J.shape[0]
    norm = float(np.linalg.norm(J, 1))
    m = min(n, max(4 * k + 12, 36))
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)

    if kind == "residual":
        gersh = float(np.max(np.diag(J) + np.sum(np.abs(J), axis=1) - np.abs(np.diag(J))))
        sigma = gersh + 1e-2 * max(1.0, abs(gersh))
        inv = None
        for _ in range(6):
            try:
                inv = np.linalg.inv(sigma * np.eye(n) - J)
            except np.linalg.LinAlgError:
                inv = None
            if inv is not None and np.all(np.isfinite(inv)):
                break
            sigma += max(1.0, abs(sigma))
        if inv is None or not np.all(np.isfinite(inv)):
            return np.full(k, np.nan, dtype=complex), "shifted operator could not be inverted"
        op = lambda x: inv @ x
        back = lambda mu: sigma - 1.0 / mu
        order_key = np.abs
        op_scale = float(np.linalg.norm(inv, 1))
    else:
        op = lambda x: J @ x
        back = lambda mu: mu
        order_key = np.abs
        op_scale = max(norm, 1.0)

    best: np.ndarray | None = None
    for _ in range(max_restarts):
        theta, Y, V, beta, width = _arnoldi_ritz(op, n, m, v, order_key)
        kk = min(k, width)
        with np.errstate(divide="ignore", invalid="ignore"):
            best = np.asarray([back(mu) for mu in theta[:kk]])
        if beta == 0.0 or all(
            abs(beta * Y[-1, i]) <= 1e-10 * op_scale for i in range(kk)
        ):
            return best, None
        v = (V @ Y[:, :kk].real).sum(axis=1)
        nrm = np.linalg.norm(v)
        v = rng.standard_normal(n) if not np.isfinite(nrm) or nrm < 1e-14 else v / nrm
        v /= np.linalg.norm(v)
    return best, f"Krylov iteration did not converge in {max_restarts} restarts"


def leading_spectrum(J: Array, k: int, kind: str = "residual",
                     dense_limit: int = DENSE_LIMIT, seed: int = 0) -> SpectrumReport:
    """The k leading eigenvalues of a Jacobian and their classification.

    "Leading" means largest real part for the residual convention and
    largest modulus for the step-map convention.  Dense solve up to
    ``dense_limit``; Krylov iteration above it.  A non-convergent iteration
    yields a Marginal classification with a diagnostic attached.
    """
    J = np.asarray(J, dtype=float)
    if J.ndim != 2 or J.shape[0] != J.shape[1]:
        raise ConfigurationError("Jacobian must be square")
    if k < 1:
        raise ConfigurationError("k must be at least 1")
    if kind not in ("residual", "step"):
        raise ConfigurationError(f"unknown spectrum kind {kind!r}")

    n = J.shape[0]
    if n <= dense_limit:
        eigs = _order(np.linalg.eigvals(J), kind)[: min(k, n)]
        return SpectrumReport(tuple(complex(e) for e in eigs), _classify(eigs, kind), kind)

    eigs, diagnostic = _arnoldi_leading(J, k, kind, seed)
    eigs = _order(np.asarray(eigs), kind)
    if diagnostic is not None:
        return SpectrumReport(tuple(complex(e) for e in eigs),
                              Classification.MARGINAL, kind, diagnostic=diagnostic)
    return SpectrumReport(tuple(complex(e) for e in eigs), _classify(eigs, kind), kind)


def stability_report(problem: Problem, state: Array, k: int = 4,
                     kind: str = "residual", eps: float | None = None,
                     dense_limit: int = DENSE_LIMIT, seed: int = 0) -> SpectrumReport:
    """Linearize the problem at ``state`` and classify the spectrum."""
    of = "residual" if kind == "residual" else "step"
    if eps is None:
        state = np.asarray(state, dtype=float)
        eps = np.sqrt(np.finfo(float).eps) * (1.0 + float(np.max(np.abs(state))))
    J = jacobian_fd(problem, state, eps, of=of)
    report = leading_spectrum(J, k, kind=kind, dense_limit=dense_limit, seed=seed)
    return SpectrumReport(report.leading_eigenvalues, report.classification,
                          report.kind, fd_epsilon=float(eps),
                          diagnostic=report.diagnostic)
