"""
Multigrid cycles and Krylov drivers.

``mgcycle`` is the recursive cycle with cycle index gamma: aggregation
levels smooth, restrict the residual, recurse gamma times and correct;
elimination levels transfer exactly and never smooth. ``pcg_solve`` runs
conjugate gradients preconditioned by one V- or W-cycle (or by the
diagonal). ``kcycle_solve`` runs flexible CG whose preconditioner applies
a few inner FCG iterations on every aggregation level below the finest.

All iterates and residuals are kept orthogonal to the constant vector.

Usage:
    from src.hierarchy import setup_hierarchy
    from src.solver import solve

    h = setup_hierarchy(L, params)
    x, result = solve(L, b, h)
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from src.elimination import elim_prolong, elim_restrict
from src.errors import DimensionMismatchError
from src.hierarchy import AggregationLevel, Hierarchy
from src.metrics import WorkCounter
from src.smoothing import chebyshev_smooth
from src.solver_schema import SolverParams

logger = logging.getLogger(__name__)

# Vector operations charged per Krylov iteration (two dots, three updates).
KRYLOV_VECTOR_OPS = 5


@dataclass
class SolveResult:
    """Iteration outcome; wrapped into a SolveReport by the harness."""
    x: np.ndarray
    residuals: list[float]
    iterations: int
    converged: bool
    work: WorkCounter
    solve_seconds: float = 0.0
    method: str = "pcg"
    notes: list[str] = field(default_factory=list)

    @property
    def relative_residual(self) -> float:
        r0 = self.residuals[0]
        return self.residuals[-1] / r0 if r0 > 0 else 0.0


def _project(v: np.ndarray) -> np.ndarray:
    return v - v.mean() if v.size else v


# =============================================================================
# Cycles
# =============================================================================

def _smooth(h: Hierarchy, level: int, b: np.ndarray, x: np.ndarray, sweeps: int,
            work: WorkCounter | None) -> np.ndarray:
    lvl: AggregationLevel = h.levels[level]
    L = h.operators[level]
    degree = h.params.cheby_degree
    for _ in range(sweeps):
        x = chebyshev_smooth(L, b, x, degree, lvl.lo, lvl.hi, lvl.dinv)
        if work is not None:
            work.count_work("smoother", degree * L.nnz, level)
    return x


def _residual(h: Hierarchy, level: int, b: np.ndarray, x: np.ndarray,
              work: WorkCounter | None) -> np.ndarray:
    L = h.operators[level]
    if work is not None:
        work.count_work("residual", L.nnz, level)
    return b - L @ x


def _coarse(h: Hierarchy, b: np.ndarray, work: WorkCounter | None) -> np.ndarray:
    level = len(h.levels)
    if work is not None:
        work.visit(level)
    return h.coarse.solve(b, work, level)


def _eliminate(h: Hierarchy, level: int, x: np.ndarray, b: np.ndarray,
               inner: Callable[[np.ndarray], np.ndarray], work: WorkCounter | None) -> np.ndarray:
    """Exact elimination transfer; ``inner`` solves the next level."""
    lvl = h.levels[level]
    nonzero_guess = bool(np.any(x))
    r = _residual(h, level, b, x, work) if nonzero_guess else b
    if work is not None:
        work.count_work("restrict", lvl.P.nnz, level)
        work.count_work("prolong", lvl.P.nnz + lvl.fine.size, level)
    e = elim_prolong(lvl, inner(elim_restrict(lvl, r)), r)
    return x + e if nonzero_guess else e


def mgcycle(
    h: Hierarchy,
    level: int,
    x: np.ndarray,
    b: np.ndarray,
    gamma: int = 1,
    work: WorkCounter | None = None,
) -> np.ndarray:
    """One multigrid cycle on ``level`` for ``L_level x = b`` starting from ``x``."""
    if level == len(h.levels):
        return _coarse(h, b, work)
    if b.shape[0] != h.operators[level].shape[0] or x.shape != b.shape:
        raise DimensionMismatchError(
            f"vectors of length {x.shape[0]}/{b.shape[0]} on level {level} "
            f"of size {h.operators[level].shape[0]}"
        )
    if work is not None:
        work.visit(level)

    lvl = h.levels[level]
    if lvl.kind == "elimination":
        def inner(bc):
            return mgcycle(h, level + 1, np.zeros_like(bc), bc, gamma, work)
        return _eliminate(h, level, x, b, inner, work)

    params = h.params
    x = _smooth(h, level, b, x, params.pre_sweeps, work)
    r = _residual(h, level, b, x, work)
    rc = lvl.R @ r
    if work is not None:
        work.count_work("restrict", lvl.R.nnz, level)
    ec = np.zeros(lvl.n_next)
    for _ in range(gamma):
        ec = mgcycle(h, level + 1, ec, rc, gamma, work)
    x = x + lvl.P @ ec
    if work is not None:
        work.count_work("prolong", lvl.P.nnz, level)
    return _smooth(h, level, b, x, params.post_sweeps, work)


# =============================================================================
# Krylov drivers
# =============================================================================

def _uses_jacobi(h: Hierarchy, params: SolverParams) -> bool:
    if params.precond == "jacobi":
        return True
    if not h.levels and not h.coarse.dense:
        logger.warning("No coarse levels and no direct coarse solve; preconditioning with Jacobi")
        return True
    return False


def _jacobi(L: sp.csr_matrix, work: WorkCounter) -> Callable[[np.ndarray], np.ndarray]:
    dinv = 1.0 / L.diagonal()

    def apply(r):
        work.count_work("jacobi", r.size)
        return dinv * r

    return apply


def _krylov(
    L: sp.csr_matrix,
    b: np.ndarray,
    precond: Callable[[np.ndarray], np.ndarray],
    max_iter: int,
    tol: float,
    work: WorkCounter | None,
    level: int = 0,
    flexible: bool = False,
) -> tuple[np.ndarray, list[float], bool]:
    """
    Preconditioned CG from a zero guess; ``flexible`` uses the
    Polak-Ribiere update so the preconditioner may vary between iterations.
    """
    n = b.shape[0]
    b = _project(b)
    x = np.zeros(n)
    r = b.copy()
    r0 = float(np.linalg.norm(r))
    residuals = [r0]
    if r0 == 0.0:
        return x, residuals, True

    z = _project(precond(r))
    p = z.copy()
    rz = float(r @ z)
    converged = False
    for iteration in range(max_iter):
        Ap = L @ p
        if work is not None:
            work.count_work("residual", L.nnz, level)
            work.count_work("vector_op", KRYLOV_VECTOR_OPS * n, level)
        pAp = float(p @ Ap)
        if pAp <= 0:
            log = logger.warning if level == 0 else logger.debug
            log(f"Krylov breakdown on level {level}: p^T L p = {pAp:.3e}")
            break
        alpha = rz / pAp
        x = _project(x + alpha * p)
        r = _project(r - alpha * Ap)
        res = float(np.linalg.norm(r))
        residuals.append(res)
        if res <= tol * r0:
            converged = True
            break
        if iteration == max_iter - 1:
            break
        z_prev = z
        z = _project(precond(r))
        rz_prev = rz
        rz = float(r @ z)
        beta = (rz - float(r @ z_prev)) / rz_prev if flexible else rz / rz_prev
        p = z + beta * p
    return x, residuals, converged


def _check(L: sp.spmatrix, b: np.ndarray, h: Hierarchy) -> None:
    if b.shape[0] != L.shape[0]:
        raise DimensionMismatchError(
            f"right-hand side of length {b.shape[0]} for {L.shape[0]} vertices"
        )
    if h.operators[0].shape != L.shape:
        raise DimensionMismatchError("hierarchy was built for a different operator")


def pcg_solve(
    L: sp.spmatrix,
    b: np.ndarray,
    h: Hierarchy,
    params: SolverParams | None = None,
) -> SolveResult:
    """CG preconditioned by one multigrid cycle (gamma from ``params.cycle``) or the diagonal."""
    params = params or h.params
    L = sp.csr_matrix(L)
    b = np.asarray(b, dtype=np.float64)
    _check(L, b, h)
    work = WorkCounter(max(L.nnz, 1))

    if _uses_jacobi(h, params):
        precond = _jacobi(L, work)
        method = "jacobi-pcg"
    else:
        gamma = 2 if params.cycle == "w" else 1

        def precond(r):
            return mgcycle(h, 0, np.zeros_like(r), r, gamma, work)

        method = f"{params.cycle}-cycle-pcg"

    start = time.perf_counter()
    x, residuals, converged = _krylov(L, b, precond, params.max_iter, params.tol, work)
    elapsed = time.perf_counter() - start
    result = SolveResult(x, residuals, len(residuals) - 1, converged, work, elapsed, method)
    _log_result(result)
    return result


def kcycle_solve(
    L: sp.spmatrix,
    b: np.ndarray,
    h: Hierarchy,
    params: SolverParams | None = None,
) -> SolveResult:
    """Flexible CG preconditioned by a K-cycle."""
    params = params or h.params
    L = sp.csr_matrix(L)
    b = np.asarray(b, dtype=np.float64)
    _check(L, b, h)
    work = WorkCounter(max(L.nnz, 1))

    if _uses_jacobi(h, params):
        precond = _jacobi(L, work)
    else:
        def precond(r):
            return _kcycle(h, 0, r, params, work)

    start = time.perf_counter()
    x, residuals, converged = _krylov(L, b, precond, params.max_iter, params.tol, work,
                                      flexible=True)
    elapsed = time.perf_counter() - start
    result = SolveResult(x, residuals, len(residuals) - 1, converged, work, elapsed, "k-cycle-fcg")
    _log_result(result)
    return result


def _kcycle(h: Hierarchy, level: int, b: np.ndarray, params: SolverParams,
            work: WorkCounter) -> np.ndarray:
    """Approximate ``L_level^-1 b`` with the K-cycle from ``level`` down."""
    if level == len(h.levels):
        return _coarse(h, b, work)
    work.visit(level)
    lvl = h.levels[level]
    if lvl.kind == "elimination":
        return _eliminate(h, level, np.zeros_like(b), b,
                          lambda bc: _coarse_level_solve(h, level + 1, bc, params, work), work)

    x = _smooth(h, level, b, np.zeros_like(b), params.pre_sweeps, work)
    r = _residual(h, level, b, x, work)
    rc = lvl.R @ r
    work.count_work("restrict", lvl.R.nnz, level)
    ec = _coarse_level_solve(h, level + 1, rc, params, work)
    x = x + lvl.P @ ec
    work.count_work("prolong", lvl.P.nnz, level)
    return _smooth(h, level, b, x, params.post_sweeps, work)


def _coarse_level_solve(h: Hierarchy, level: int, b: np.ndarray, params: SolverParams,
                        work: WorkCounter) -> np.ndarray:
    """Solve on ``level``: Krylov-accelerated at aggregation levels, pass-through otherwise."""
    if level == len(h.levels) or h.levels[level].kind == "elimination":
        return _kcycle(h, level, b, params, work)
    x, _res, _ok = _krylov(
        h.operators[level], b,
        lambda r: _kcycle(h, level, r, params, work),
        params.kcycle_inner, 0.0, work, level=level, flexible=True,
    )
    return x


def solve(
    L: sp.spmatrix,
    b: np.ndarray,
    h: Hierarchy,
    params: SolverParams | None = None,
) -> SolveResult:
    """Dispatch on ``params.cycle``."""
    params = params or h.params
    if params.cycle == "k":
        return kcycle_solve(L, b, h, params)
    return pcg_solve(L, b, h, params)


def _log_result(result: SolveResult) -> None:
    status = "converged" if result.converged else "did not converge"
    logger.info(f"{result.method} {status} in {result.iterations} iterations "
                f"(relative residual {result.relative_residual:.3e}, "
                f"{result.work.total:.1f} work units)")
