import math

import numpy as np
import pytest

from odro import (DivergedTooFast, OdroConfig, SnapshotBuffer, budget,
                  divergence_guard, make_problem, problem_r_total, run_baseline,
                  run_cycle, run_odro)
from odro.core import Phase
from odro.driver import CycleDisposition


class TestDivergenceGuard:
    cfg = OdroConfig(divergence_factor=1e6)

    def test_nan_trips(self):
        assert divergence_guard(float("nan"), 1.0, self.cfg)

    def test_equal_does_not_trip(self):
        assert not divergence_guard(1.0, 1.0, self.cfg)

    def test_threshold(self):
        assert divergence_guard(1e4, 1e-3, self.cfg)          # 1e4 > 1e3
        assert not divergence_guard(9.9e2, 1e-3, self.cfg)


class TestRunCycle:
    def test_steady_start_returns_unchanged(self):
        p = make_problem("linear_map")
        cfg = OdroConfig(n_snapshots=3, interval=2, n_modes=2)
        star = p.fixed_point
        outcome = run_cycle(p, star, cfg)
        assert outcome.disposition in (CycleDisposition.FALLBACK,
                                       CycleDisposition.CONVERGED_MID)
        assert np.max(np.abs(outcome.state - star)) < 1e-12

    def test_linear_cycle_descends(self):
        p = make_problem("linear_map")
        cfg = OdroConfig(n_snapshots=5, interval=10, n_modes=2,
                         budget_divisor=1, rank_tol=1e-8)
        state = p.initial_state()
        r_start = problem_r_total(p, state)
        outcome = run_cycle(p, state, cfg)
        assert outcome.r_total < r_start

    def test_guarded_acceptance_never_exceeds_best_snapshot(self):
        p = make_problem("lorenz")
        cfg = OdroConfig(budget_divisor=5, rank_tol=1e-8)
        outcome = run_cycle(p, p.initial_state(), cfg)
        assert outcome.r_total <= outcome.min_snapshot_r

    def test_records_per_iteration_plus_boundary(self):
        p = make_problem("linear_map")
        cfg = OdroConfig(n_snapshots=3, interval=4, n_modes=2, budget_divisor=1)
        outcome = run_cycle(p, p.initial_state(), cfg)
        iterate = [r for r in outcome.records if r.phase is Phase.ITERATE]
        optimize = [r for r in outcome.records if r.phase is Phase.OPTIMIZE]
        assert len(iterate) == 12 and len(optimize) == 1
        assert [r.iteration for r in iterate] == list(range(1, 13))
        assert optimize[0].iteration == 12

    def test_diverged_too_fast_mentions_interval(self):
        p = make_problem("heat_cfl", mesh_ratio=2.0)
        cfg = OdroConfig()  # interval 80 cannot snapshot before blow-up
        with pytest.raises(DivergedTooFast, match="interval"):
            run_cycle(p, p.initial_state(), cfg)

    def test_persistent_buffer_rescues_truncated_cycle(self):
        p = make_problem("heat_cfl", mesh_ratio=2.0, m=3)
        cfg = OdroConfig(n_snapshots=10, interval=1, n_modes=3,
                         budget_divisor=1, divergence_factor=100.0)
        buf = SnapshotBuffer(cfg.n_snapshots)
        state = p.initial_state()
        outcome = run_cycle(p, state, cfg, buffer=buf, start_iteration=0)
        assert outcome.guard_tripped
        assert len(buf) >= 2
        # second cycle reuses the surviving buffer
        outcome2 = run_cycle(p, outcome.state, cfg, buffer=buf,
                             start_iteration=outcome.end_iteration,
                             cycle_index=2, r_start=outcome.r_total)
        assert outcome2.steps >= 2


class TestRunOdro:
    def test_linear_map_converges_to_solve_oracle(self):
        p = make_problem("linear_map")
        cfg = OdroConfig(n_snapshots=5, interval=10, n_modes=2, budget_divisor=1,
                         max_cycles=20, rank_tol=1e-8)
        result = run_odro(p, cfg)
        oracle = np.linalg.solve(np.eye(2) - p.A, p.b)
        assert result.converged
        assert result.final_r_total < 1e-10
        assert np.max(np.abs(result.final_state - oracle)) < 1e-8

    def test_lorenz_reaches_an_equilibrium(self):
        p = make_problem("lorenz")
        cfg = OdroConfig(budget_divisor=3, rank_tol=0.05)
        result = run_odro(p, cfg)
        assert result.converged
        dists = [np.max(np.abs(result.final_state - e)) for e in p.equilibria()]
        assert min(dists) < 1e-8

    def test_steady_start_is_zero_cycles(self):
        p = make_problem("linear_map", x0=np.array([1.0, 1.0]))
        result = run_odro(p, OdroConfig())
        assert result.converged
        assert result.cycles_used == 0
        assert result.total_iterations == 0
        assert np.allclose(result.final_state, [1.0, 1.0])

    def test_history_phase_structure(self):
        p = make_problem("linear_map")
        cfg = OdroConfig(n_snapshots=4, interval=5, n_modes=2, budget_divisor=1,
                         max_cycles=10, rank_tol=1e-8)
        result = run_odro(p, cfg)
        since_optimize = 0
        for rec in result.history:
            if rec.phase is Phase.ITERATE:
                since_optimize += 1
            else:
                assert 2 <= since_optimize <= cfg.n_snapshots * cfg.interval
                since_optimize = 0
        iterations = [r.iteration for r in result.history if r.phase is Phase.ITERATE]
        assert iterations == sorted(iterations)
        assert len(set(iterations)) == len(iterations)

    def test_cost_share_bound(self):
        for name, cfg in [
            ("linear_map", OdroConfig(n_snapshots=5, interval=10, n_modes=2,
                                      budget_divisor=1, max_cycles=20, rank_tol=1e-8)),
            ("lorenz", OdroConfig(budget_divisor=3, rank_tol=0.05)),
        ]:
            result = run_odro(make_problem(name), cfg)
            bound = (result.total_iterations / cfg.budget_divisor
                     + result.cycles_used * (cfg.n_modes + 2))
            assert result.total_objective_evals <= bound

    def test_optimize_records_match_cycles_used(self):
        p = make_problem("lorenz")
        result = run_odro(p, OdroConfig(budget_divisor=3, rank_tol=0.05))
        optimize = [r for r in result.history if r.phase is Phase.OPTIMIZE]
        assert len(optimize) == result.cycles_used

    def test_guard_trip_counting(self):
        p = make_problem("heat_cfl", mesh_ratio=2.0, m=3)
        cfg = OdroConfig(n_snapshots=300, interval=1, n_modes=300,
                         budget_divisor=1, max_cycles=100,
                         divergence_factor=30.0, rank_tol=1e-8)
        result = run_odro(p, cfg)
        assert result.guard_trips >= 1
        assert result.converged


class TestRunBaseline:
    def test_linear_growth_matches_spectral_radius(self):
        p = make_problem("linear_map")
        cfg = OdroConfig()
        result = run_baseline(p, cfg, max_iterations=100)
        r0 = problem_r_total(p, p.initial_state())
        # error grows like rho^n = 1.2^100 ~ 8.3e7; residual keeps pace
        assert result.final_r_total / r0 > 1e3
        assert not result.converged
        assert result.total_iterations == 100
        assert all(r.phase is Phase.ITERATE for r in result.history)

    def test_monotone_growth_on_linear_map(self):
        p = make_problem("linear_map")
        result = run_baseline(p, OdroConfig(), max_iterations=60)
        values = [r.r_total for r in result.history]
        assert all(b >= a for a, b in zip(values[10:], values[11:]))

    def test_stops_on_non_finite(self):
        p = make_problem("heat_cfl", mesh_ratio=2.0, m=3)
        result = run_baseline(p, OdroConfig(), max_iterations=10_000)
        assert not result.converged
        assert math.isinf(result.final_r_total)
        assert result.total_iterations < 10_000
