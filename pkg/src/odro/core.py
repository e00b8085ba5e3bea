"""Shared domain types, the solver/problem contract, and run bookkeeping.

A "state" throughout this package is a flat float64 array of the problem's
degrees of freedom.  A "residual field" is the array of per-cell residual
vectors of the steady equations; it is zero exactly at a steady state.
"""
from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum

import numpy as np

Array = np.ndarray


class OdroError(Exception):
    """Base class for errors raised by this package."""


class ConfigurationError(OdroError):
    """Invalid configuration or contract violation detected before a run."""


class NoUsableModes(OdroError):
    """Snapshot ensemble is degenerate (all columns identical after centering)."""


class DivergedTooFast(OdroError):
    """Iteration blew up before two finite snapshots could be collected.

    The standard remediation is a smaller snapshot interval so that samples
    land inside the window where the iterates are still finite.
    """


class Phase(str, Enum):
    """Which stage of the alternating loop produced a history record."""

    ITERATE = "iterate"
    OPTIMIZE = "optimize"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


@dataclass(frozen=True)
class OdroConfig:
    """Parameters of one run.

    n_snapshots : number of snapshots N kept in the ring buffer
    interval    : iterations K between successive snapshots
    n_modes     : maximum number of basis modes O retained by the POD
    budget_divisor : the optimizer may spend at most (iteration count of the
        cycle) / budget_divisor objective evaluations, floored below by
        n_modes + 2 so a simplex can always be built and compared once
    convergence_tol : run is converged when the RMS residual drops below this
    max_cycles  : cycle limit before giving up
    divergence_factor : snapshot collection stops early once the residual
        exceeds this multiple of the cycle-start residual
    rank_tol    : relative singular-value cutoff for the POD rank
    rng_seed    : seed for the few stochastic utilities (spectrum start vectors)
    """

    n_snapshots: int = 5
    interval: int = 80
    n_modes: int = 5
    budget_divisor: int = 10
    convergence_tol: float = 1e-10
    max_cycles: int = 100
    divergence_factor: float = 1e6
    rank_tol: float = 1e-12
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.n_snapshots < 2:
            raise ConfigurationError("n_snapshots must be at least 2")
        if self.interval < 1:
            raise ConfigurationError("interval must be at least 1")
        if self.n_modes < 1:
            raise ConfigurationError("n_modes must be at least 1")
        if self.n_modes > self.n_snapshots:
            raise ConfigurationError(
                f"n_modes ({self.n_modes}) may not exceed n_snapshots ({self.n_snapshots})"
            )
        if self.budget_divisor < 1:
            raise ConfigurationError("budget_divisor must be at least 1")
        if not self.convergence_tol > 0:
            raise ConfigurationError("convergence_tol must be positive")
        if self.max_cycles < 1:
            raise ConfigurationError("max_cycles must be at least 1")
        if not self.divergence_factor > 1:
            raise ConfigurationError("divergence_factor must exceed 1")


def budget(config: OdroConfig, steps: int | None = None) -> int:
    """Evaluation budget for one subspace optimization.

    ``max(O + 2, floor(N*K / divisor))`` for a full collection window; when a
    cycle was cut short by the divergence guard, ``steps`` is the number of
    iterations actually taken and the budget is prorated so the optimization
    cost share stays bounded.
    """
    if steps is None:
        steps = config.n_snapshots * config.interval
    return max(config.n_modes + 2, steps // config.budget_divisor)


@dataclass(frozen=True)
class ConvergenceRecord:
    """One row of a run's convergence history."""

    iteration: int
    r_total: float
    phase: Phase
    cycle: int


class Problem(ABC):
    """Contract between the driver and an iterative solver.

    ``step`` advances the baseline iteration by one step; ``residual``
    evaluates the steady-equation residual field without advancing anything.
    Both must be deterministic and free of side effects, so the optimizer can
    probe candidate states at will.  ``residual`` returning exactly zero
    characterizes a steady state, whether or not the iteration can reach it.
    """

    @property
    @abstractmethod
    def n_dof(self) -> int:
        """Number of degrees of freedom in a state vector."""

    @property
    @abstractmethod
    def n_cells(self) -> int:
        """Number of cells (grid elements) in the residual field."""

    @property
    @abstractmethod
    def n_eq(self) -> int:
        """Number of equations per cell."""

    @abstractmethod
    def initial_state(self) -> Array:
        """Starting state of the baseline iteration."""

    @abstractmethod
    def step(self, state: Array) -> Array:
        """One iteration of the baseline solver."""

    @abstractmethod
    def residual(self, state: Array) -> Array:
        """Steady-equation residual field, shape (n_cells,) or (n_cells, n_eq)."""
