"""Orthogonal basis extraction from snapshot ensembles.

The basis is computed by the method of snapshots: instead of decomposing the
tall n_dof x N snapshot matrix directly, the small N x N Gram matrix of the
centered snapshots is diagonalized and the left singular vectors are
recovered as linear combinations of the snapshot columns.  With the handful
of snapshots used here this is exact and cheap.  Right singular vectors are
never needed downstream and are not formed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Array, ConfigurationError, NoUsableModes


class SnapshotBuffer:
    """Ring buffer of the most recent sampled states.

    Keeps at most ``capacity`` entries; appending beyond that evicts the
    oldest.  Iteration tags must be strictly increasing.  The stored residual
    norms let the driver pick its fallback state without re-evaluating.
    """

    def __init__(self, capacity: int):
        if capacity < 2:
            raise ConfigurationError("snapshot buffer needs capacity >= 2")
        self.capacity = capacity
        self._tags: list[int] = []
        self._states: list[Array] = []
        self._r_totals: list[float] = []

    def __len__(self) -> int:
        return len(self._states)

    @property
    def is_full(self) -> bool:
        return len(self._states) == self.capacity

    @property
    def iteration_tags(self) -> list[int]:
        return list(self._tags)

    @property
    def states(self) -> list[Array]:
        return list(self._states)

    @property
    def r_totals(self) -> list[float]:
        return list(self._r_totals)

    def append(self, tag: int, state: Array, r_total: float) -> None:
        if self._tags and tag <= self._tags[-1]:
            raise ConfigurationError(
                f"snapshot tags must increase: got {tag} after {self._tags[-1]}"
            )
        self._tags.append(tag)
        self._states.append(np.array(state, dtype=float, copy=True))
        self._r_totals.append(float(r_total))
        if len(self._states) > self.capacity:
            del self._tags[0], self._states[0], self._r_totals[0]

    def replace_last(self, state: Array, r_total: float) -> None:
        """Overwrite the newest entry in place (same iteration tag)."""
        if not self._states:
            raise ConfigurationError("cannot replace in an empty buffer")
        self._states[-1] = np.array(state, dtype=float, copy=True)
        self._r_totals[-1] = float(r_total)

    def matrix(self) -> Array:
        """Snapshots as columns, n_dof x len(self)."""
        return np.column_stack(self._states)

    def best(self) -> tuple[Array, float]:
        """State with the smallest recorded residual norm."""
        i = int(np.argmin(self._r_totals))
        return self._states[i], self._r_totals[i]


@dataclass(frozen=True)
class PodBasis:
    """Affine basis u = mean + modes @ xi.

    ``modes`` is column-orthonormal (n_dof x rank); ``singular_values`` are
    the retained singular values of the centered snapshot matrix, sorted
    non-increasing.
    """

    mean: Array
    modes: Array
    singular_values: Array

    @property
    def rank(self) -> int:
        return self.modes.shape[1]


def center(snapshots: SnapshotBuffer) -> tuple[Array, Array]:
    """Split snapshots into their column mean and the centered matrix."""
    if len(snapshots) < 2:
        raise ConfigurationError("need at least 2 snapshots to build a basis")
    X = snapshots.matrix()
    mean = X.mean(axis=1)
    return mean, X - mean[:, None]


def _jacobi_eigh(C: Array, off_tol: float = 1e-14, max_sweeps: int = 64) -> tuple[Array, Array]:
    """Cyclic Jacobi diagonalization of a small symmetric matrix.

    Rotations are swept until the off-diagonal Frobenius norm falls below
    ``off_tol`` relative to the matrix norm.  Returns eigenvalues (unsorted)
    and the accumulated orthogonal eigenvector matrix.
    """
    A = np.array(C, dtype=float)
    n = A.shape[0]
    V = np.eye(n)
    scale = max(np.linalg.norm(A), 1.0)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(A, -1) ** 2) * 2.0)
        if off <= off_tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 0.25 * off_tol * scale / n:
                    continue
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.sign(tau) / (abs(tau) + np.hypot(1.0, tau)) if tau != 0 else 1.0
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                rot = np.array([[c, s], [-s, c]])
                A[[p, q], :] = rot.T @ A[[p, q], :]
                A[:, [p, q]] = A[:, [p, q]] @ rot
                V[:, [p, q]] = V[:, [p, q]] @ rot
    return np.diag(A).copy(), V


def _sym_eigh(C: Array) -> tuple[Array, Array]:
    # Jacobi is exact and dependency-free at the usual buffer sizes; hand the
    # occasional oversized buffer (deep remediation runs) to LAPACK.
    if C.shape[0] <= 32:
        return _jacobi_eigh(C)
    eigvals, eigvecs = np.linalg.eigh(C)
    return eigvals, eigvecs


def decompose(centered: Array, n_modes: int, rank_tol: float, mean: Array | None = None) -> PodBasis:
    """Build an orthonormal basis from a centered snapshot matrix.

    Forms the Gram matrix of the columns, diagonalizes it, drops directions
    whose singular value falls below ``rank_tol`` times the largest, and
    keeps at most ``n_modes`` of the rest.  Each mode's sign is fixed so its
    largest-magnitude entry is positive.

    Raises NoUsableModes when the centered matrix is numerically zero, which
    happens when the iterates have stopped moving.
    """
    centered = np.asarray(centered, dtype=float)
    if centered.ndim != 2 or centered.shape[1] < 2:
        raise ConfigurationError("centered snapshot matrix needs at least 2 columns")
    if n_modes < 1:
        raise ConfigurationError("n_modes must be at least 1")
    if mean is None:
        mean = np.zeros(centered.shape[0])

    # Normalize by the largest entry so the Gram matrix cannot overflow even
    # for snapshot ensembles collected during a violent blow-up.
    scale = np.max(np.abs(centered))
    if not np.isfinite(scale):
        raise NoUsableModes("non-finite entries in the centered snapshot matrix")
    if scale == 0.0:
        raise NoUsableModes("all snapshots identical after centering")
    Xs = centered / scale

    gram = Xs.T @ Xs
    eigvals, eigvecs = _sym_eigh(gram)
    order = np.argsort(eigvals)[::-1]
    eigvals = np.maximum(eigvals[order], 0.0)
    eigvecs = eigvecs[:, order]

    sv = np.sqrt(eigvals)
    if sv[0] <= 0.0:
        raise NoUsableModes("all snapshots identical after centering")
    rank = min(n_modes, int(np.sum(sv > rank_tol * sv[0])))
    if rank == 0:
        raise NoUsableModes("no singular value above the rank tolerance")

    modes = Xs @ (eigvecs[:, :rank] / sv[:rank])
    # Re-orthonormalize: the Gram route loses orthogonality for directions
    # many orders of magnitude below the leading one.  Columns that collapse
    # under the projections carried no independent information; drop them.
    kept = []
    for j in range(rank):
        for i in kept:
            modes[:, j] -= (modes[:, i] @ modes[:, j]) * modes[:, i]
        nrm = np.linalg.norm(modes[:, j])
        if np.isfinite(nrm) and nrm > 1e-6:
            modes[:, j] /= nrm
            kept.append(j)
    if not kept:
        raise NoUsableModes("snapshot directions collapsed during orthonormalization")
    modes = modes[:, kept]
    sv = sv[kept]
    rank = len(kept)
    flip = np.sign(modes[np.argmax(np.abs(modes), axis=0), np.arange(rank)])
    flip[flip == 0] = 1.0
    modes *= flip

    return PodBasis(mean=np.asarray(mean, dtype=float), modes=modes,
                    singular_values=sv * scale)


def build_basis(snapshots: SnapshotBuffer, n_modes: int, rank_tol: float) -> PodBasis:
    """center + decompose in one call."""
    mean, centered = center(snapshots)
    return decompose(centered, n_modes, rank_tol, mean=mean)


def reconstruct(basis: PodBasis, xi: Array) -> Array:
    """Map mode coefficients back to a full state: mean + modes @ xi."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (basis.rank,):
        raise ConfigurationError(
            f"coefficient vector has shape {xi.shape}, expected ({basis.rank},)"
        )
    return basis.mean + basis.modes @ xi


def project(basis: PodBasis, state: Array) -> Array:
    """Coefficients of the orthogonal projection of ``state`` onto the basis."""
    return basis.modes.T @ (np.asarray(state, dtype=float) - basis.mean)
