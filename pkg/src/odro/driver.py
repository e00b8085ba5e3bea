"""The outer alternation loop: iterate, snapshot, reduce, optimize, restart.

Each cycle advances the baseline solver for up to N*K steps, sampling every
K-th iterate into a ring buffer that persists across cycles.  A divergence
guard cuts collection short when the residual blows past a configured
multiple of the cycle-start value, so violently unstable iterations trigger
the optimization early instead of overflowing.  The basis is rebuilt from
the buffer, the residual norm is minimized over the affine subspace, and the
next cycle restarts from the optimized state, guarded so a cycle never ends
worse than the best snapshot it has seen.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .core import (Array, ConfigurationError, ConvergenceRecord, DivergedTooFast,
                   NoUsableModes, OdroConfig, Phase, Problem, budget)
from .optimizer import minimize
from .pod import SnapshotBuffer, build_basis, project, reconstruct
from .residual import Objective, problem_r_total


class CycleDisposition(Enum):
    OPTIMIZED = "optimized"
    FALLBACK = "fallback"           # degenerate snapshots, kept iterating
    CONVERGED_MID = "converged_mid"  # tolerance reached while collecting


@dataclass
class CycleOutcome:
    state: Array
    r_total: float
    records: list[ConvergenceRecord]
    steps: int
    n_evals: int
    guard_tripped: bool
    disposition: CycleDisposition
    end_iteration: int
    min_snapshot_r: float = math.inf


@dataclass
class RunResult:
    """Everything a run produces besides its output files."""

    final_state: Array
    final_r_total: float
    converged: bool
    cycles_used: int
    total_iterations: int
    total_objective_evals: int
    history: list[ConvergenceRecord] = field(default_factory=list)
    guard_trips: int = 0


def divergence_guard(r_now: float, r_cycle_start: float, config: OdroConfig) -> bool:
    """True when the residual has blown up relative to the cycle start."""
    if not math.isfinite(r_now):
        return True
    return r_now > config.divergence_factor * r_cycle_start


def run_cycle(problem: Problem, state: Array, config: OdroConfig,
              buffer: SnapshotBuffer | None = None, start_iteration: int = 0,
              cycle_index: int = 1, r_start: float | None = None) -> CycleOutcome:
    """One iterate-snapshot-optimize pass.

    ``buffer`` carries snapshots across cycles; a fresh one is created when
    none is given.  ``start_iteration`` is the global iteration counter at
    entry.  Raises DivergedTooFast when the guard fires before two finite
    snapshots ever existed.
    """
    if buffer is None:
        buffer = SnapshotBuffer(config.n_snapshots)
    if r_start is None:
        r_start = problem_r_total(problem, state)

    records: list[ConvergenceRecord] = []
    t = start_iteration
    steps = 0
    tripped = False

    for _ in range(config.n_snapshots * config.interval):
        with np.errstate(over="ignore", invalid="ignore"):
            state = problem.step(state)
        t += 1
        steps += 1
        r_now = problem_r_total(problem, state)
        records.append(ConvergenceRecord(t, r_now, Phase.ITERATE, cycle_index))
        if t % config.interval == 0 and np.all(np.isfinite(state)):
            buffer.append(t, state, r_now)
        if r_now < config.convergence_tol:
            return CycleOutcome(state, r_now, records, steps, 0, False,
                                CycleDisposition.CONVERGED_MID, t)
        # Two steps minimum so every optimization is preceded by real
        # iteration, even when the very first step already blows up.
        if steps >= 2 and divergence_guard(r_now, r_start, config):
            tripped = True
            break

    if len(buffer) < 2:
        raise DivergedTooFast(
            f"residual blew up after {steps} steps with {len(buffer)} usable "
            f"snapshots; reduce the snapshot interval (currently {config.interval}) "
            "so at least two snapshots are collected before blow-up"
        )

    best_snap, best_snap_r = buffer.best()
    try:
        basis = build_basis(buffer, config.n_modes, config.rank_tol)
    except NoUsableModes:
        accepted, accepted_r = best_snap, best_snap_r
        records.append(ConvergenceRecord(t, accepted_r, Phase.OPTIMIZE, cycle_index))
        _store_accepted(buffer, t, accepted, accepted_r, config)
        return CycleOutcome(accepted, accepted_r, records, steps, 0, tripped,
                            CycleDisposition.FALLBACK, t, best_snap_r)

    objective = Objective(problem, basis)
    xi0 = project(basis, buffer.states[-1])
    guards = basis.singular_values / basis.singular_values[0]
    result = minimize(objective, xi0, budget(config, steps), scale_guards=guards)

    if result.fun <= best_snap_r:
        accepted = reconstruct(basis, result.x)
        accepted_r = result.fun
    else:
        accepted, accepted_r = best_snap, best_snap_r

    records.append(ConvergenceRecord(t, accepted_r, Phase.OPTIMIZE, cycle_index))
    _store_accepted(buffer, t, accepted, accepted_r, config)
    return CycleOutcome(accepted, accepted_r, records, steps, result.n_evals,
                        tripped, CycleDisposition.OPTIMIZED, t, best_snap_r)


def _store_accepted(buffer: SnapshotBuffer, t: int, state: Array, r: float,
                    config: OdroConfig) -> None:
    # The restart state enters the buffer only where it lands on the sampling
    # grid; it supersedes the sample taken at the same iteration.
    if len(buffer) and buffer.iteration_tags[-1] == t:
        buffer.replace_last(state, r)
    elif t % config.interval == 0:
        buffer.append(t, state, r)


def run_odro(problem: Problem, config: OdroConfig) -> RunResult:
    """Drive cycles from the problem's initial state until convergence.

    Convergence means the RMS residual drops below ``config.convergence_tol``
    at a cycle boundary (or mid-collection).  A run that exhausts
    ``max_cycles`` reports converged=False with whatever state it reached.
    """
    state = problem.initial_state()
    r_now = problem_r_total(problem, state)
    history: list[ConvergenceRecord] = []
    buffer = SnapshotBuffer(config.n_snapshots)
    t = 0
    cycles = 0
    evals = 0
    trips = 0

    while r_now >= config.convergence_tol and cycles < config.max_cycles:
        outcome = run_cycle(problem, state, config, buffer=buffer,
                            start_iteration=t, cycle_index=cycles + 1, r_start=r_now)
        history.extend(outcome.records)
        state, r_now, t = outcome.state, outcome.r_total, outcome.end_iteration
        evals += outcome.n_evals
        trips += int(outcome.guard_tripped)
        if outcome.disposition is CycleDisposition.CONVERGED_MID:
            break
        cycles += 1

    return RunResult(final_state=state, final_r_total=r_now,
                     converged=bool(r_now < config.convergence_tol),
                     cycles_used=cycles, total_iterations=t,
                     total_objective_evals=evals, history=history,
                     guard_trips=trips)


def run_baseline(problem: Problem, config: OdroConfig,
                 max_iterations: int | None = None) -> RunResult:
    """Plain iteration without any optimization, for comparison runs.

    Stops at the convergence tolerance, at a non-finite state, or at the
    iteration cap (by default the same total the optimized run may spend).
    """
    if max_iterations is None:
        max_iterations = config.max_cycles * config.n_snapshots * config.interval
    if max_iterations < 1:
        raise ConfigurationError("max_iterations must be at least 1")

    state = problem.initial_state()
    r_now = problem_r_total(problem, state)
    history: list[ConvergenceRecord] = []
    t = 0
    while r_now >= config.convergence_tol and t < max_iterations:
        with np.errstate(over="ignore", invalid="ignore"):
            state = problem.step(state)
        t += 1
        r_now = problem_r_total(problem, state)
        history.append(ConvergenceRecord(t, r_now, Phase.ITERATE, 0))
        if not math.isfinite(r_now):
            break

    return RunResult(final_state=state, final_r_total=r_now,
                     converged=bool(r_now < config.convergence_tol),
                     cycles_used=0, total_iterations=t,
                     total_objective_evals=0, history=history)
