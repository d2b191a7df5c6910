"""
Solve pipeline, right-hand sides and benchmark suites.

``run_solve`` is the one code path shared by the CLI, the tool server and
the benchmark suites: build (or reuse) a hierarchy, solve, and assemble a
:class:`SolveReport` with work, WDA/TDA and efficiency figures.

Usage:
    from src.harness import run_bench, write_bench_csv

    rows = run_bench("small")
    write_bench_csv(rows, "out.csv")
"""

import csv
import logging
from pathlib import Path
from typing import Callable

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from src import graphs, metrics
from src.hierarchy import Hierarchy, setup_hierarchy
from src.laplacian import Graph, laplacian_from_graph
from src.solver import SolveResult, solve
from src.solver_schema import Efficiency, SolveReport, SolverParams
from src.sparse_core import make_rng, thread_count

logger = logging.getLogger(__name__)

BENCH_CSV_HEADER = ["graph", "n", "nnz", "levels", "iters", "wda", "tda", "opcx"]
RHS_KINDS = ("random", "lowmodes", "file")
DEFAULT_LOW_MODES = 4
# Above this size low modes come from shift-invert Lanczos instead of a dense eigensolver.
DENSE_EIGEN_LIMIT = 2000


# =============================================================================
# Right-hand sides
# =============================================================================

def random_rhs(n: int, seed: int = 0) -> np.ndarray:
    """Standard normal entries with the constant component removed."""
    b = make_rng(seed).standard_normal(n)
    return b - b.mean() if n else b


def lowmode_rhs(L: sp.spmatrix, k: int = DEFAULT_LOW_MODES, seed: int = 0) -> np.ndarray:
    """Random combination of the ``k`` smallest nonconstant eigenvectors of ``L``."""
    L = sp.csr_matrix(L)
    n = L.shape[0]
    k = max(1, min(k, n - 1))
    if n <= 1:
        return np.zeros(n)
    if n <= DENSE_EIGEN_LIMIT:
        _vals, vecs = scipy.linalg.eigh(L.toarray())
        modes = vecs[:, 1:k + 1]
    else:
        shift = -1e-3 * float(L.diagonal().mean())
        v0 = make_rng(seed).standard_normal(n)
        vals, vecs = spla.eigsh(L, k=k + 1, sigma=shift, which="LM", v0=v0)
        order = np.argsort(vals)
        modes = vecs[:, order[1:k + 1]]
    b = modes @ make_rng(seed).standard_normal(modes.shape[1])
    return b - b.mean()


def load_rhs(path: str | Path, n: int) -> np.ndarray:
    """Read one value per line (whitespace separated values are also accepted)."""
    b = np.loadtxt(path, dtype=np.float64, ndmin=1)
    if b.size != n:
        raise ValueError(f"right-hand side in {path} has {b.size} entries, expected {n}")
    return b


def make_rhs(L: sp.spmatrix, kind: str = "random", seed: int = 0,
             path: str | Path | None = None) -> np.ndarray:
    if kind == "random":
        return random_rhs(L.shape[0], seed)
    if kind == "lowmodes":
        return lowmode_rhs(L, seed=seed)
    if kind == "file":
        if path is None:
            raise ValueError("--rhs file needs --rhs-file")
        return load_rhs(path, L.shape[0])
    raise ValueError(f"unknown right-hand side kind {kind!r}; expected one of {RHS_KINDS}")


# =============================================================================
# Solve pipeline
# =============================================================================

def build_report(
    name: str,
    L: sp.spmatrix,
    h: Hierarchy,
    result: SolveResult,
    params: SolverParams,
    dropped_self_loops: int = 0,
) -> SolveReport:
    r0, rn = result.residuals[0], result.residuals[-1]
    wda = tda = None
    if result.iterations > 0 and r0 > 0 and result.work.total > 0:
        wda = metrics.wda(r0, rn, result.work.total)
        tda = metrics.tda(r0, rn, result.solve_seconds)
    processes = thread_count()
    eff = metrics.efficiency(L.nnz, tda, result.solve_seconds, result.work.total, processes)
    return SolveReport(
        graph=name,
        n=L.shape[0],
        nnz=L.nnz,
        params=params,
        levels=h.level_info(),
        residuals=result.residuals,
        iterations=result.iterations,
        converged=result.converged,
        work_units=result.work.total,
        wda=wda,
        tda=tda,
        setup_seconds=h.setup_seconds,
        solve_seconds=result.solve_seconds,
        operator_complexity=max(h.operator_complexity(), 1.0),
        dropped_self_loops=dropped_self_loops,
        efficiency=Efficiency(**eff),
    )


def run_solve(
    L: sp.spmatrix,
    b: np.ndarray | None = None,
    params: SolverParams | None = None,
    name: str = "graph",
    hierarchy: Hierarchy | None = None,
    dropped_self_loops: int = 0,
) -> tuple[np.ndarray, SolveReport, Hierarchy]:
    """Setup (unless ``hierarchy`` is given), solve and report."""
    params = params or SolverParams()
    L = sp.csr_matrix(L)
    if b is None:
        b = random_rhs(L.shape[0], params.seed)
    h = hierarchy or setup_hierarchy(L, params)
    result = solve(L, b, h, params)
    report = build_report(name, L, h, result, params, dropped_self_loops)
    return result.x, report, h


# =============================================================================
# Benchmark suites
# =============================================================================

GraphFactory = Callable[[], Graph]

SUITES: dict[str, list[tuple[str, GraphFactory]]] = {
    "small": [
        ("path100", lambda: graphs.path(100)),
        ("grid16x16", lambda: graphs.grid2d(16, 16)),
        ("grid3d6", lambda: graphs.grid3d(6)),
        ("pa2000", lambda: graphs.preferential_attachment(2000, 4, seed=1)),
        ("sw2000", lambda: graphs.small_world(2000, seed=1)),
    ],
    "desk": [
        ("path10000", lambda: graphs.path(10000)),
        ("grid64x64", lambda: graphs.grid2d(64, 64)),
        ("grid3d16", lambda: graphs.grid3d(16)),
        ("pa20000", lambda: graphs.preferential_attachment(20000, 4, seed=1)),
        ("sw20000", lambda: graphs.small_world(20000, seed=1)),
    ],
}


def bench_row(name: str, report: SolveReport) -> dict:
    return {
        "graph": name,
        "n": report.n,
        "nnz": report.nnz,
        "levels": len(report.levels),
        "iters": report.iterations,
        "wda": "" if report.wda is None else f"{report.wda:.4f}",
        "tda": "" if report.tda is None else f"{report.tda:.6f}",
        "opcx": f"{report.operator_complexity:.4f}",
    }


def run_bench(suite: str = "small", params: SolverParams | None = None) -> list[dict]:
    """Solve every graph of ``suite`` with a seeded random right-hand side."""
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; expected one of {sorted(SUITES)}")
    params = params or SolverParams()
    rows = []
    for name, factory in SUITES[suite]:
        L = laplacian_from_graph(factory())
        _x, report, _h = run_solve(L, params=params, name=name)
        rows.append(bench_row(name, report))
        logger.info(f"{name}: {report.iterations} iterations, WDA {rows[-1]['wda'] or 'n/a'}")
    return rows


def write_bench_csv(rows: list[dict], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=BENCH_CSV_HEADER)
        writer.writeheader()
        writer.writerows(rows)
