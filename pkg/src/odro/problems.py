"""Desk-scale problems whose baseline iterations cannot reach their own
steady states.

Two failure classes are covered: physically unstable fixed points that the
dynamics repel (expanding linear maps, the Lorenz equilibria, the zero state
of a supercritical reaction-diffusion rod) and numerically unstable
discretizations (explicit heat stepping above the stability limit).  Every
problem has a steady state known in closed form or by direct solve, so runs
can be checked against an independent oracle.
"""
from __future__ import annotations

import numpy as np

from .core import Array, ConfigurationError, Problem
from .stability import spectral_radius


class LinearMapProblem(Problem):
    """Fixed-point iteration x -> A x + b with an expanding A.

    The unique fixed point (I - A)^-1 b is computed by direct solve at
    construction.  Spectral radius above one makes plain iteration diverge
    from it at a known geometric rate.
    """

    def __init__(self, A: Array | None = None, b: Array | None = None,
                 rho: float = 1.2, x0: Array | None = None):
        if A is None:
            A = np.diag([float(rho), 0.5])
            if b is None:
                b = np.array([1.0 - rho, 0.5])
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        if b is None:
            raise ConfigurationError("b is required when A is given explicitly")
        self.b = np.atleast_1d(np.asarray(b, dtype=float))
        n = self.b.size
        if self.A.shape != (n, n):
            raise ConfigurationError(f"A must be {n}x{n} to match b")
        radius = spectral_radius(self.A)
        if radius <= 1.0:
            raise ConfigurationError(
                f"spectral radius {radius:.6g} violates the instability bound > 1"
            )
        self.fixed_point = np.linalg.solve(np.eye(n) - self.A, self.b)
        self.x0 = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float)

    @property
    def n_dof(self) -> int:
        return self.b.size

    @property
    def n_cells(self) -> int:
        return self.b.size

    @property
    def n_eq(self) -> int:
        return 1

    def initial_state(self) -> Array:
        return self.x0.copy()

    def step(self, state: Array) -> Array:
        return self.A @ state + self.b

    def residual(self, state: Array) -> Array:
        return self.A @ state + self.b - state


class LorenzProblem(Problem):
    """Explicit Euler on the Lorenz equations above the Hopf threshold.

    For rho > ~24.74 (at the classic sigma, beta) the nonzero equilibria
    C+- = (+-sqrt(beta (rho-1)), +-sqrt(beta (rho-1)), rho - 1) are unstable
    and trajectories wander the chaotic attractor instead of settling.
    """

    HOPF_RHO = 24.74

    def __init__(self, sigma: float = 10.0, beta: float = 8.0 / 3.0,
                 rho: float = 28.0, dt: float = 0.01):
        if rho <= self.HOPF_RHO:
            raise ConfigurationError(
                f"rho = {rho} violates the instability bound > {self.HOPF_RHO}"
            )
        if dt <= 0:
            raise ConfigurationError("dt must be positive")
        self.sigma, self.beta, self.rho, self.dt = sigma, beta, rho, dt

    @property
    def n_dof(self) -> int:
        return 3

    @property
    def n_cells(self) -> int:
        return 3

    @property
    def n_eq(self) -> int:
        return 1

    def equilibria(self) -> tuple[Array, Array]:
        c = np.sqrt(self.beta * (self.rho - 1.0))
        return (np.array([c, c, self.rho - 1.0]),
                np.array([-c, -c, self.rho - 1.0]))

    def initial_state(self) -> Array:
        return np.array([1.0, 1.0, 1.0])

    def residual(self, state: Array) -> Array:
        x, y, z = state
        return np.array([self.sigma * (y - x),
                         x * (self.rho - z) - y,
                         x * y - self.beta * z])

    def step(self, state: Array) -> Array:
        return state + self.dt * self.residual(state)


class ChafeeInfanteProblem(Problem):
    """1-D reaction-diffusion rod u_t = u_xx + lam (u - u^3), Dirichlet ends.

    Central differences on m interior nodes of [0, 1].  Above lam = pi^2 the
    trivial steady state u = 0 is linearly unstable and nontrivial branches
    exist; the explicit Euler step itself is run inside its stability limit
    so any divergence is physical, not numerical.
    """

    def __init__(self, lam: float = 20.0, m: int = 63, mesh_ratio: float = 0.4):
        if lam <= np.pi ** 2:
            raise ConfigurationError(
                f"lam = {lam} violates the instability bound > pi^2 ~ {np.pi**2:.4f}"
            )
        if m < 1:
            raise ConfigurationError("m must be at least 1")
        if not 0 < mesh_ratio < 0.5:
            raise ConfigurationError("mesh_ratio must lie in (0, 0.5) for a stable step")
        self.lam = float(lam)
        self.m = int(m)
        self.dx = 1.0 / (m + 1)
        self.dt = mesh_ratio * self.dx ** 2
        self.nodes = np.linspace(self.dx, 1.0 - self.dx, m)

    @property
    def n_dof(self) -> int:
        return self.m

    @property
    def n_cells(self) -> int:
        return self.m

    @property
    def n_eq(self) -> int:
        return 1

    def initial_state(self) -> Array:
        return 1e-3 * np.sin(np.pi * self.nodes)

    def residual(self, state: Array) -> Array:
        padded = np.concatenate(([0.0], state, [0.0]))
        diffusion = (padded[:-2] - 2.0 * padded[1:-1] + padded[2:]) / self.dx ** 2
        return diffusion + self.lam * (state - state ** 3)

    def step(self, state: Array) -> Array:
        return state + self.dt * self.residual(state)


class HeatCflProblem(Problem):
    """Explicit heat stepping run above the mesh-ratio stability limit.

    u_t = u_xx on [0, 1] with u(0) = 0, u(1) = 1 on m interior nodes.  The
    steady state is the exact linear ramp u_i = i/(m+1), but with
    dt/dx^2 > 0.5 the highest grid modes are amplified each step and the
    iteration diverges no matter how close it starts.
    """

    def __init__(self, mesh_ratio: float = 0.6, m: int = 63):
        if mesh_ratio <= 0.5:
            raise ConfigurationError(
                f"mesh_ratio = {mesh_ratio} violates the instability bound > 0.5"
            )
        if m < 1:
            raise ConfigurationError("m must be at least 1")
        self.mesh_ratio = float(mesh_ratio)
        self.m = int(m)
        self.dx = 1.0 / (m + 1)
        self.dt = mesh_ratio * self.dx ** 2
        self.ramp = np.arange(1, m + 1) / (m + 1)

    @property
    def n_dof(self) -> int:
        return self.m

    @property
    def n_cells(self) -> int:
        return self.m

    @property
    def n_eq(self) -> int:
        return 1

    def initial_state(self) -> Array:
        return np.zeros(self.m)

    def residual(self, state: Array) -> Array:
        padded = np.concatenate(([0.0], state, [1.0]))
        return (padded[:-2] - 2.0 * padded[1:-1] + padded[2:]) / self.dx ** 2

    def step(self, state: Array) -> Array:
        return state + self.dt * self.residual(state)


_REGISTRY = {
    "linear_map": LinearMapProblem,
    "lorenz": LorenzProblem,
    "chafee_infante": ChafeeInfanteProblem,
    "heat_cfl": HeatCflProblem,
}

_ORACLE_STATES = {
    "linear_map": lambda p: p.fixed_point,
    "lorenz": lambda p: p.equilibria()[0],
    "chafee_infante": lambda p: np.zeros(p.m),
    "heat_cfl": lambda p: p.ramp.copy(),
}


def problem_names() -> list[str]:
    return sorted(_REGISTRY)


def oracle_steady_state(name: str, problem: Problem) -> Array:
    """A steady state known independently of any solver, for verification."""
    return _ORACLE_STATES[name](problem)


def make_problem(name: str, **params) -> Problem:
    """Construct a problem by name, enforcing its instability precondition
    and checking that the oracle steady state actually zeroes the residual."""
    try:
        cls = _REGISTRY[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown problem {name!r}; choose from {', '.join(problem_names())}"
        ) from None
    try:
        problem = cls(**params)
    except TypeError as exc:
        raise ConfigurationError(f"bad parameters for {name}: {exc}") from None

    star = oracle_steady_state(name, problem)
    worst = float(np.max(np.abs(problem.residual(star))))
    if worst >= 1e-12:
        raise ConfigurationError(
            f"oracle steady state of {name} has residual {worst:.3e} >= 1e-12"
        )
    return problem
