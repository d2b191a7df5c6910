"""Tests for multigrid cycles and the Krylov drivers."""

import numpy as np
import pytest

from src import graphs
from src.errors import DimensionMismatchError
from src.harness import random_rhs
from src.hierarchy import setup_hierarchy
from src.laplacian import laplacian_from_graph
from src.metrics import WorkCounter
from src.solver import kcycle_solve, mgcycle, pcg_solve, solve
from src.solver_schema import SolverParams
from tests.conftest import zero_mean_solution

PARAMS = SolverParams(coarse_nnz=50, seed=2)


@pytest.fixture(scope="module")
def grid_setup():
    L = laplacian_from_graph(graphs.grid2d(32, 32))
    return L, setup_hierarchy(L, PARAMS)


@pytest.fixture(scope="module")
def pa_setup():
    L = laplacian_from_graph(graphs.preferential_attachment(600, 3, seed=4))
    return L, setup_hierarchy(L, PARAMS)


# ============================================================================
# Edge cases
# ============================================================================

class TestSolveEdgeCases:
    """Trivial right-hand sides and input checks."""

    def test_zero_rhs_returns_zero(self, grid_setup):
        L, h = grid_setup
        result = solve(L, np.zeros(L.shape[0]), h)
        assert result.iterations == 0
        assert result.converged
        assert not np.any(result.x)

    def test_constant_rhs_is_projected_away(self, grid_setup):
        L, h = grid_setup
        result = solve(L, np.full(L.shape[0], 3.0), h)
        assert result.iterations == 0
        assert result.residuals == [0.0]

    def test_p3_exact(self, p3):
        h = setup_hierarchy(p3, SolverParams(coarse_nnz=1))
        b = np.array([1.0, 0.0, -1.0])
        result = solve(p3, b, h, SolverParams(coarse_nnz=1, tol=1e-12))
        assert result.converged
        assert np.allclose(result.x, [1.0, 0.0, -1.0], atol=1e-10)

    def test_direct_coarse_solve_converges_in_one_iteration(self, p4):
        h = setup_hierarchy(p4)
        result = solve(p4, np.array([1.0, 0.0, 0.0, -1.0]), h)
        assert result.converged
        assert result.iterations == 1

    def test_rhs_length_checked(self, grid_setup):
        L, h = grid_setup
        with pytest.raises(DimensionMismatchError):
            solve(L, np.ones(5), h)

    def test_hierarchy_must_match_operator(self, grid_setup, p3):
        _L, h = grid_setup
        with pytest.raises(DimensionMismatchError):
            solve(p3, np.zeros(3), h)

    def test_iteration_cap(self, grid_setup):
        L, h = grid_setup
        params = PARAMS.model_copy(update={"max_iter": 2, "tol": 1e-14})
        result = solve(L, random_rhs(L.shape[0], 1), h, params)
        assert not result.converged
        assert result.iterations == 2
        assert len(result.residuals) == 3


# ============================================================================
# Convergence
# ============================================================================

class TestConvergence:
    """Each cycle type reaches the tolerance and the true solution."""

    @pytest.mark.parametrize("cycle", ["v", "w", "k"])
    def test_grid_converges(self, grid_setup, cycle):
        L, h = grid_setup
        b = random_rhs(L.shape[0], 3)
        params = PARAMS.model_copy(update={"cycle": cycle})
        result = solve(L, b, h, params)
        assert result.converged
        assert result.iterations <= 60
        assert np.linalg.norm(b - L @ result.x) <= 1e-8 * np.linalg.norm(b) * 1.01
        assert abs(result.x.mean()) < 1e-12

    def test_matches_dense_solution(self, pa_setup):
        L, h = pa_setup
        b = random_rhs(L.shape[0], 5)
        result = solve(L, b, h, PARAMS.model_copy(update={"tol": 1e-10}))
        expected = zero_mean_solution(L, b)
        assert np.linalg.norm(result.x - expected) <= 1e-6 * np.linalg.norm(expected)

    def test_residuals_recorded_per_iteration(self, pa_setup):
        L, h = pa_setup
        result = solve(L, random_rhs(L.shape[0], 6), h)
        assert len(result.residuals) == result.iterations + 1
        assert result.residuals[-1] <= PARAMS.tol * result.residuals[0]

    def test_jacobi_preconditioner(self, grid_setup):
        L, h = grid_setup
        params = PARAMS.model_copy(update={"precond": "jacobi"})
        result = pcg_solve(L, random_rhs(L.shape[0], 2), h, params)
        assert result.method == "jacobi-pcg"
        assert result.converged
        assert result.work.events["jacobi"] > 0

    def test_multigrid_beats_jacobi(self, grid_setup):
        L, h = grid_setup
        b = random_rhs(L.shape[0], 8)
        mg = pcg_solve(L, b, h)
        jac = pcg_solve(L, b, h, PARAMS.model_copy(update={"precond": "jacobi"}))
        assert mg.iterations < jac.iterations

    def test_plain_chebyshev_smoother(self, grid32):
        params = SolverParams(coarse_nnz=50, smoother="chebyshev")
        h = setup_hierarchy(grid32, params)
        result = solve(grid32, random_rhs(1024, 4), h, params)
        assert result.converged

    def test_deterministic(self, pa_setup):
        L, h = pa_setup
        b = random_rhs(L.shape[0], 7)
        assert np.array_equal(solve(L, b, h).x, solve(L, b, h).x)


# ============================================================================
# Cycles
# ============================================================================

class TestCycles:
    """Tests for mgcycle and the work accounting of each cycle."""

    def test_vcycle_is_symmetric(self, pa_setup):
        L, h = pa_setup
        rng = np.random.default_rng(0)
        u = rng.standard_normal(L.shape[0])
        v = rng.standard_normal(L.shape[0])
        u -= u.mean()
        v -= v.mean()
        Mu = mgcycle(h, 0, np.zeros_like(u), u)
        Mv = mgcycle(h, 0, np.zeros_like(v), v)
        assert v @ Mu == pytest.approx(u @ Mv, rel=1e-8)

    def test_vcycle_is_positive_on_nonconstant_vectors(self, pa_setup):
        L, h = pa_setup
        rng = np.random.default_rng(1)
        for _ in range(5):
            u = rng.standard_normal(L.shape[0])
            u -= u.mean()
            assert u @ mgcycle(h, 0, np.zeros_like(u), u) > 0

    def test_vcycle_reduces_error(self, grid_setup):
        L, h = grid_setup
        b = random_rhs(L.shape[0], 9)
        x = mgcycle(h, 0, np.zeros_like(b), b)
        assert np.linalg.norm(b - L @ x) < np.linalg.norm(b)

    def test_wcycle_visits_coarsest_more(self, grid_setup):
        L, h = grid_setup
        b = random_rhs(L.shape[0], 1)
        coarsest = len(h.levels)
        v_work, w_work = WorkCounter(L.nnz), WorkCounter(L.nnz)
        mgcycle(h, 0, np.zeros_like(b), b, 1, v_work)
        mgcycle(h, 0, np.zeros_like(b), b, 2, w_work)
        assert v_work.visits[coarsest] == 1
        assert w_work.visits[coarsest] > v_work.visits[coarsest]
        assert w_work.total > v_work.total

    def test_kcycle_costs_more_per_iteration(self, grid_setup):
        L, h = grid_setup
        b = random_rhs(L.shape[0], 2)
        v = pcg_solve(L, b, h)
        k = kcycle_solve(L, b, h, PARAMS.model_copy(update={"cycle": "k"}))
        assert k.work.total / k.iterations > v.work.total / v.iterations

    def test_work_categories(self, grid_setup):
        L, h = grid_setup
        result = pcg_solve(L, random_rhs(L.shape[0], 3), h)
        events = result.work.events
        for event in ("residual", "smoother", "restrict", "prolong", "coarse_solve", "vector_op"):
            assert events[event] > 0
        assert result.work.total == pytest.approx(sum(events.values()))
        assert result.work.total == pytest.approx(sum(result.work.per_level.values()))

    def test_elimination_levels_never_smooth(self, star6):
        h = setup_hierarchy(star6, SolverParams(coarse_nnz=1))
        work = WorkCounter(star6.nnz)
        b = np.array([5.0, -1.0, -1.0, -1.0, -1.0, -1.0])
        x = mgcycle(h, 0, np.zeros(6), b, 1, work)
        assert work.events["smoother"] == 0
        assert np.allclose(star6 @ x, b)


# ============================================================================
# K-cycle against V-cycle on paths
# ============================================================================

def _outer_iterations(n: int) -> tuple[int, int]:
    L = laplacian_from_graph(graphs.path(n))
    params = SolverParams()
    h = setup_hierarchy(L, params)
    b = random_rhs(n, 0)
    v = pcg_solve(L, b, h, params)
    k = kcycle_solve(L, b, h, params.model_copy(update={"cycle": "k"}))
    assert v.converged and k.converged
    return v.iterations, k.iterations


class TestKCycleOnPaths:
    """The K-cycle needs no more outer iterations than the V-cycle on long paths."""

    def test_path_1000(self):
        v_iters, k_iters = _outer_iterations(1000)
        assert k_iters <= v_iters

    @pytest.mark.slow
    def test_path_10000(self):
        v_iters, k_iters = _outer_iterations(10000)
        assert k_iters <= v_iters
