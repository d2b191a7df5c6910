"""
Multigrid hierarchy setup.

Every level first tries low-degree elimination (kept only when it removes
more than ``elim_gate`` of the vertices) and then coarsens by aggregation
on the affinity strength matrix. Coarsening stops once the operator has at
most ``coarse_nnz`` nonzeros, the level cap is reached, or aggregation
stops making progress. The random vertex relabelling only affects the
block layout of the finest operator.

Usage:
    from src.hierarchy import setup_hierarchy
    from src.solver_schema import SolverParams

    h = setup_hierarchy(L, SolverParams(coarse_nnz=500))
    for row in h.level_info():
        print(row.kind, row.n, row.nnz)
"""

import logging
import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from src.aggregation import (
    Assignment,
    aggregate,
    build_restriction,
    galerkin_coarse,
)
from src.elimination import EliminationLevel, build_elimination_level, select_elimination
from src.laplacian import require_connected
from src.metrics import WorkCounter
from src.smoothing import chebyshev_bounds, estimate_lmax
from src.solver_schema import LevelInfo, SolverParams
from src.sparse_core import BlockLayout, block_load_stats, random_permutation, transpose
from src.strength import strength_of_connection

logger = logging.getLogger(__name__)

# Largest coarsest operator factored densely; larger (stalled) ones use Jacobi-CG.
DENSE_COARSE_LIMIT = 4000
COARSE_ITERATIVE_RTOL = 1e-10
# Seed offset for the second aggregation attempt on a level.
RETRY_SEED_OFFSET = 1000


@dataclass(frozen=True)
class AggregationLevel:
    """Aggregation transfer from a level to the next, with that level's smoother data."""
    R: sp.csr_matrix
    P: sp.csr_matrix
    L_next: sp.csr_matrix
    assignment: Assignment
    lmax: float
    lo: float
    hi: float
    dinv: np.ndarray | None

    kind = "aggregation"

    @property
    def n(self) -> int:
        return self.R.shape[1]

    @property
    def n_next(self) -> int:
        return self.R.shape[0]


Level = EliminationLevel | AggregationLevel


class CoarseSolver:
    """
    Solver for the coarsest (singular) Laplacian.

    Small operators are grounded: the last row and column are replaced by
    the identity, the system is LU-factored once, and every solution is
    shifted to zero mean. Larger operators fall back to Jacobi-CG.
    """

    def __init__(self, L: sp.spmatrix):
        self.L = sp.csr_matrix(L)
        self.n = self.L.shape[0]
        self.dense = self.n <= DENSE_COARSE_LIMIT
        self._lu = None
        self._dinv = None
        if self.n == 0:
            return
        if self.dense:
            grounded = self.L.toarray()
            grounded[-1, :] = 0.0
            grounded[:, -1] = 0.0
            grounded[-1, -1] = 1.0
            self._lu = scipy.linalg.lu_factor(grounded)
        else:
            diag = self.L.diagonal()
            self._dinv = np.where(diag > 0, 1.0 / np.where(diag > 0, diag, 1.0), 0.0)
            logger.warning(f"Coarsest operator has {self.n} vertices; "
                           f"using Jacobi-CG coarse solves")

    def solve(self, b: np.ndarray, work: WorkCounter | None = None, level: int = 0) -> np.ndarray:
        if self.n == 0:
            return np.zeros(0)
        rhs = b - b.mean()
        if self.dense:
            rhs[-1] = 0.0
            x = scipy.linalg.lu_solve(self._lu, rhs)
            if work is not None:
                work.count_work("coarse_solve", float(self.n) ** 2, level)
        else:
            iterations = 0

            def count(_xk):
                nonlocal iterations
                iterations += 1

            M = sp.diags(self._dinv)
            x, _info = spla.cg(self.L, rhs, rtol=COARSE_ITERATIVE_RTOL, maxiter=10 * self.n,
                               M=M, callback=count)
            if work is not None:
                work.count_work("coarse_solve", iterations * (self.L.nnz + 6 * self.n), level)
        return x - x.mean()


@dataclass(frozen=True)
class Hierarchy:
    """
    Levels ``0..len(levels)-1`` transfer ``operators[l]`` to ``operators[l+1]``;
    ``operators[-1]`` is solved by ``coarse``.
    """
    levels: tuple[Level, ...]
    operators: tuple[sp.csr_matrix, ...]
    coarse: CoarseSolver
    params: SolverParams
    imbalance: tuple[float, ...]
    stalled: bool = False
    setup_seconds: float = 0.0
    setup_matvecs: int = 0

    @property
    def num_levels(self) -> int:
        return len(self.operators)

    def level_info(self) -> list[LevelInfo]:
        rows = []
        for l, L in enumerate(self.operators):
            kind = self.levels[l].kind if l < len(self.levels) else "coarsest"
            rows.append(LevelInfo(kind=kind, n=L.shape[0], nnz=L.nnz, imbalance=self.imbalance[l]))
        return rows

    def operator_complexity(self) -> float:
        fine = self.operators[0].nnz
        if fine == 0:
            return 1.0
        return sum(L.nnz for L in self.operators) / fine

    def count(self, kind: str) -> int:
        return sum(1 for level in self.levels if level.kind == kind)


def layout_for_level(params: SolverParams, level: int, n: int) -> BlockLayout:
    """Block layout used for the semiring products on ``level``."""
    layout = BlockLayout(params.grid_rows, params.grid_cols)
    if level == 0 and params.randomize:
        return layout.with_perm(random_permutation(n, params.seed))
    return layout


def _done(L: sp.csr_matrix, params: SolverParams, num_operators: int) -> bool:
    return L.nnz <= params.coarse_nnz or num_operators >= params.max_levels


def _aggregation_level(
    L: sp.csr_matrix, params: SolverParams, layout: BlockLayout, level: int
) -> tuple[AggregationLevel | None, int]:
    n = L.shape[0]
    matvecs = 0
    for attempt in range(2):
        seed = params.seed + level + attempt * RETRY_SEED_OFFSET
        S, spent = strength_of_connection(
            L, m=params.test_vectors, sweeps=params.test_sweeps, seed=seed, layout=layout
        )
        matvecs += spent
        assignment = aggregate(S, params.voting_rounds, params.vote_threshold, layout)
        if assignment.num_aggregates < n:
            break
        logger.info(f"Level {level}: aggregation made no progress (attempt {attempt + 1})")
    else:
        return None, matvecs

    R = build_restriction(assignment)
    P = transpose(R)
    L_next = galerkin_coarse(R, L, P)

    if params.smoother == "jacobi-chebyshev":
        dinv = 1.0 / L.diagonal()
    else:
        dinv = None
    lmax = estimate_lmax(L, seed=seed, dinv=dinv)
    matvecs += min(n, 10)
    lo, hi = chebyshev_bounds(lmax)
    return AggregationLevel(R, P, L_next, assignment, lmax, lo, hi, dinv), matvecs


def setup_hierarchy(L: sp.spmatrix, params: SolverParams | None = None) -> Hierarchy:
    """Build the level hierarchy of a connected Laplacian."""
    params = params or SolverParams()
    start = time.perf_counter()
    L = sp.csr_matrix(L)
    n0 = L.shape[0]

    finest_layout = layout_for_level(params, 0, n0)
    require_connected(L, finest_layout)

    levels: list[Level] = []
    operators = [L]
    imbalance = [block_load_stats(finest_layout.partition(L)).imbalance]
    current = L
    stalled = False
    matvecs = 0

    while not _done(current, params, len(operators)):
        depth = len(levels)
        layout = finest_layout if depth == 0 else layout_for_level(params, depth, current.shape[0])

        for _ in range(params.elim_rounds):
            if _done(current, params, len(operators)):
                break
            n = current.shape[0]
            F = select_elimination(current, params.max_degree, layout)
            if F.size <= params.elim_gate * n or F.size >= n:
                break
            level = build_elimination_level(current, F)
            levels.append(level)
            logger.info(f"Level {len(levels) - 1}: elimination {n} -> {level.n_next} vertices, "
                        f"nnz {current.nnz} -> {level.L_next.nnz}")
            current = level.L_next
            operators.append(current)
            layout = layout_for_level(params, len(levels), current.shape[0])
            imbalance.append(block_load_stats(layout.partition(current)).imbalance)

        if _done(current, params, len(operators)):
            break

        agg, spent = _aggregation_level(current, params, layout, len(levels))
        matvecs += spent
        if agg is None:
            stalled = True
            logger.warning(f"Coarsening stalled at level {len(levels)} with "
                           f"{current.shape[0]} vertices and {current.nnz} nonzeros")
            break
        levels.append(agg)
        logger.info(f"Level {len(levels) - 1}: aggregation {agg.n} -> {agg.n_next} vertices, "
                    f"nnz {current.nnz} -> {agg.L_next.nnz}, lambda_max ~ {agg.lmax:.4g}")
        current = agg.L_next
        operators.append(current)
        next_layout = layout_for_level(params, len(levels), current.shape[0])
        imbalance.append(block_load_stats(next_layout.partition(current)).imbalance)

    coarse = CoarseSolver(current)
    elapsed = time.perf_counter() - start
    logger.info(f"Hierarchy: {len(operators)} operators, coarsest n={current.shape[0]} "
                f"nnz={current.nnz}, setup {elapsed:.3f}s")
    return Hierarchy(
        levels=tuple(levels),
        operators=tuple(operators),
        coarse=coarse,
        params=params,
        imbalance=tuple(imbalance),
        stalled=stalled,
        setup_seconds=elapsed,
        setup_matvecs=matvecs,
    )
