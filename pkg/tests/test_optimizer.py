import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from odro import ConfigurationError, adaptive_params, initial_simplex, minimize


def counted(fun):
    calls = {"n": 0}

    def wrapper(x):
        calls["n"] += 1
        return fun(x)

    return wrapper, calls


class TestAdaptiveParams:
    def test_dim_two(self):
        p = adaptive_params(2)
        assert (p.alpha, p.beta, p.gamma, p.delta) == (1.0, 2.0, 0.5, 0.5)

    def test_dim_one_clamps_shrink(self):
        p = adaptive_params(1)
        assert (p.alpha, p.beta, p.gamma, p.delta) == (1.0, 3.0, 0.25, 0.5)

    def test_limit_approached_monotonically(self):
        dims = [2, 4, 8, 16, 64, 256]
        betas = [adaptive_params(d).beta for d in dims]
        gammas = [adaptive_params(d).gamma for d in dims]
        deltas = [adaptive_params(d).delta for d in dims]
        assert all(b1 > b2 > 1.0 for b1, b2 in zip(betas, betas[1:]))
        assert all(g1 < g2 < 0.75 for g1, g2 in zip(gammas, gammas[1:]))
        assert all(d1 < d2 < 1.0 for d1, d2 in zip(deltas, deltas[1:]))


class TestInitialSimplex:
    def test_floor_case(self):
        simplex = initial_simplex(np.zeros(2), scale_guards=np.zeros(2))
        assert np.allclose(simplex[0], [0.0, 0.0])
        assert np.allclose(simplex[1], [5e-10, 0.0])
        assert np.allclose(simplex[2], [0.0, 5e-10])

    def test_unit_guards(self):
        simplex = initial_simplex(np.array([10.0, -2.0]), scale_guards=np.ones(2))
        assert np.allclose(simplex[1], [10.5, -2.0])
        assert np.allclose(simplex[2], [10.0, -2.1])

    def test_start_point_is_vertex_zero(self):
        fun, calls = counted(lambda x: float(np.sum(x**2)))
        x0 = np.array([2.0, 3.0])
        result = minimize(fun, x0, budget=4)
        assert result.fun <= float(np.sum(x0**2))


class TestMinimize:
    def test_convex_bowl(self):
        result = minimize(lambda x: float(x @ x), np.array([1.0, 1.0]), budget=200)
        assert result.fun < 1e-10

    def test_rosenbrock(self):
        def rosen(x):
            return float((1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2)

        result = minimize(rosen, np.array([-1.2, 1.0]), budget=500)
        assert result.fun < 1e-6
        assert np.allclose(result.x, [1.0, 1.0], atol=1e-2)

    def test_all_inf_except_start(self):
        x0 = np.array([0.5, -0.25])

        def spike(x):
            return 7.0 if np.array_equal(x, x0) else float("inf")

        result = minimize(spike, x0, budget=30)
        assert result.fun == 7.0
        assert np.array_equal(result.x, x0)

    def test_budget_too_small(self):
        with pytest.raises(ConfigurationError):
            minimize(lambda x: 0.0, np.zeros(3), budget=4)

    def test_budget_respected_exactly(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            dim = int(rng.integers(1, 6))
            budget = int(rng.integers(dim + 2, 120))
            H = rng.normal(size=(dim, dim))
            H = H.T @ H + 0.01 * np.eye(dim)
            fun, calls = counted(lambda x, H=H: float(x @ H @ x))
            minimize(fun, rng.normal(size=dim) * 10, budget=budget)
            assert calls["n"] <= budget

    def test_deterministic(self):
        fun = lambda x: float((x[0] - 3) ** 2 + x[1] ** 4)
        r1 = minimize(fun, np.array([0.0, 1.0]), budget=77)
        r2 = minimize(fun, np.array([0.0, 1.0]), budget=77)
        assert r1.fun == r2.fun
        assert np.array_equal(r1.x, r2.x)

    def test_quadratic_deep_descent(self):
        rng = np.random.default_rng(42)
        for dim in range(1, 6):
            A = rng.normal(size=(dim, dim))
            H = A.T @ A + 0.1 * np.eye(dim)
            x0 = rng.normal(size=dim)
            fun = lambda x, H=H: float(x @ H @ x)
            result = minimize(fun, x0, budget=100 * dim)
            assert result.fun < 1e-8 * fun(x0)

    def test_nan_treated_as_inf(self):
        def sometimes_nan(x):
            return float("nan") if x[0] < 0 else float(x @ x)

        result = minimize(sometimes_nan, np.array([1.0, 1.0]), budget=100)
        assert np.isfinite(result.fun)

    @settings(max_examples=60, deadline=None)
    @given(
        dim=st.integers(1, 4),
        seed=st.integers(0, 10_000),
        budget_extra=st.integers(0, 60),
    )
    def test_never_worse_property(self, dim, seed, budget_extra):
        rng = np.random.default_rng(seed)
        A = rng.normal(size=(dim, dim))
        H = A.T @ A + 1e-3 * np.eye(dim)
        shift = rng.normal(size=dim)
        cutoff = float(rng.uniform(0.5, 50.0))

        def fun(x):
            # quadratic with an inf plateau, mimicking blow-up regions
            if np.max(np.abs(x)) > cutoff:
                return float("inf")
            d = x - shift
            return float(d @ H @ d)

        x0 = rng.normal(size=dim) * rng.uniform(0.1, 10.0)
        budget = dim + 2 + budget_extra
        fun_counted, calls = counted(fun)
        result = minimize(fun_counted, x0, budget=budget)
        assert result.fun <= fun(x0)
        assert calls["n"] <= budget
