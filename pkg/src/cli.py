"""
Command-line interface.

Subcommands:
    solve      Solve L x = b for a graph file and print/write the report
    hierarchy  Build the hierarchy and print the per-level table
    bench      Run a fixture suite and write a CSV of WDA/TDA per graph
    validate   Check the Laplacian of a graph file

Exit codes: 0 success, 1 parse or validation error, 2 no convergence.

Usage:
    laplace-amg solve graph.mtx --tol 1e-8 --json out.json
    laplace-amg hierarchy graph.txt --format edge-list --grid 2x2
    laplace-amg bench --suite small --csv out.csv
"""

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from pydantic import ValidationError

from src.errors import DisconnectedGraphError, LaplaceAMGError
from src.harness import RHS_KINDS, SUITES, make_rhs, run_bench, run_solve, write_bench_csv
from src.hierarchy import setup_hierarchy
from src.laplacian import (
    EDGE_LIST,
    MATRIX_MARKET,
    is_connected,
    laplacian_from_graph,
    largest_component,
    load_graph,
    validate_laplacian,
)
from src.solver_schema import SolverParams
from src.sparse_core import THREADS_ENV, BlockLayout

LOG_LEVEL_ENV = "LAPLACE_AMG_LOG_LEVEL"

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NOT_CONVERGED = 2

logger = logging.getLogger(__name__)


def _add_solver_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tol", type=float, default=1e-8, help="Relative residual tolerance")
    p.add_argument("--cycle", choices=["v", "w", "k"], default="v", help="Cycle type")
    p.add_argument("--precond", choices=["mg", "jacobi"], default="mg", help="Preconditioner")
    p.add_argument("--smoother", choices=["jacobi-chebyshev", "chebyshev"],
                   default="jacobi-chebyshev")
    p.add_argument("--seed", type=int, default=0, help="Seed for randomization and the RHS")
    p.add_argument("--max-levels", type=int, default=40)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--cheby-degree", type=int, default=2)
    p.add_argument("--coarse-nnz", type=int, default=1000)
    p.add_argument("--elim-rounds", type=int, default=1)
    p.add_argument("--grid", default="1x1", help="Block grid shape RxC for semiring products")
    p.add_argument("--no-randomize", action="store_true",
                   help="Keep the natural vertex order in the finest block layout")
    p.add_argument("--threads", type=int, default=None,
                   help=f"Worker threads for block products (sets {THREADS_ENV})")


def _add_graph_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("graph", type=Path, help="Graph file")
    p.add_argument("--format", choices=[MATRIX_MARKET, EDGE_LIST], default=None,
                   help="Input format (default: from the file extension)")
    p.add_argument("--largest-component", action="store_true",
                   help="Solve on the largest connected component instead of failing")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="laplace-amg",
        description="Graph Laplacian solver: aggregation multigrid with low-degree elimination",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="Solve L x = b")
    _add_graph_options(p_solve)
    _add_solver_options(p_solve)
    p_solve.add_argument("--rhs", choices=RHS_KINDS, default="random")
    p_solve.add_argument("--rhs-file", type=Path, default=None,
                         help="Right-hand side values, one per line (with --rhs file)")
    p_solve.add_argument("--json", type=Path, default=None, help="Write the report here")
    p_solve.add_argument("--solution", type=Path, default=None, help="Write x here")

    p_hier = sub.add_parser("hierarchy", help="Print the level table without solving")
    _add_graph_options(p_hier)
    _add_solver_options(p_hier)

    p_bench = sub.add_parser("bench", help="Run a fixture suite")
    p_bench.add_argument("--suite", choices=sorted(SUITES), default="small")
    p_bench.add_argument("--csv", type=Path, default=None, help="Write rows here")
    _add_solver_options(p_bench)

    p_val = sub.add_parser("validate", help="Validate the Laplacian of a graph file")
    p_val.add_argument("graph", type=Path)
    p_val.add_argument("--format", choices=[MATRIX_MARKET, EDGE_LIST], default=None)

    return parser


def _params(args: argparse.Namespace) -> SolverParams:
    layout = BlockLayout.parse(args.grid)
    return SolverParams(
        tol=args.tol,
        cycle=args.cycle,
        precond=args.precond,
        smoother=args.smoother,
        seed=args.seed,
        max_levels=args.max_levels,
        max_iter=args.max_iter,
        cheby_degree=args.cheby_degree,
        coarse_nnz=args.coarse_nnz,
        elim_rounds=args.elim_rounds,
        grid_rows=layout.grid_rows,
        grid_cols=layout.grid_cols,
        randomize=not args.no_randomize,
    )


def _load_laplacian(args: argparse.Namespace):
    g = load_graph(args.graph, args.format)
    if args.largest_component:
        g, _kept = largest_component(g)
    L = laplacian_from_graph(g)
    if not is_connected(L):
        raise DisconnectedGraphError("graph is disconnected")
    return g, L


def _print_levels(rows) -> None:
    print(f"{'level':>5} {'kind':<12} {'n':>10} {'nnz':>12} {'imbalance':>10}")
    for i, row in enumerate(rows):
        print(f"{i:>5} {row.kind:<12} {row.n:>10} {row.nnz:>12} {row.imbalance:>10.3f}")


def cmd_solve(args: argparse.Namespace) -> int:
    params = _params(args)
    g, L = _load_laplacian(args)
    b = make_rhs(L, args.rhs, args.seed, args.rhs_file)
    x, report, _h = run_solve(L, b, params, args.graph.name,
                              dropped_self_loops=g.dropped_self_loops)

    _print_levels(report.levels)
    status = "converged" if report.converged else "NOT converged"
    wda = "n/a" if report.wda is None else f"{report.wda:.3f}"
    print(f"{status}: {report.iterations} iterations, "
          f"relative residual {report.relative_residual:.3e}, WDA {wda}, "
          f"operator complexity {report.operator_complexity:.3f}")

    if args.json:
        args.json.write_text(report.model_dump_json(indent=2), encoding="utf-8")
        logger.info(f"Report written to {args.json}")
    if args.solution:
        args.solution.write_text("\n".join(repr(float(v)) for v in x) + "\n", encoding="utf-8")
    return EXIT_OK if report.converged else EXIT_NOT_CONVERGED


def cmd_hierarchy(args: argparse.Namespace) -> int:
    params = _params(args)
    _g, L = _load_laplacian(args)
    h = setup_hierarchy(L, params)
    _print_levels(h.level_info())
    print(f"operator complexity {h.operator_complexity():.3f}"
          + (" (coarsening stalled)" if h.stalled else ""))
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    rows = run_bench(args.suite, _params(args))
    if args.csv:
        write_bench_csv(rows, args.csv)
        logger.info(f"Wrote {len(rows)} rows to {args.csv}")
    else:
        print(json.dumps(rows, indent=2))
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    g = load_graph(args.graph, args.format)
    L = laplacian_from_graph(g)
    result = validate_laplacian(L)
    print(result)
    if g.dropped_self_loops:
        print(f"{g.dropped_self_loops} self-loop(s) dropped")
    connected = is_connected(L)
    print("graph is connected" if connected else "graph is disconnected")
    return EXIT_OK if result.is_valid and connected else EXIT_INVALID


COMMANDS = {
    "solve": cmd_solve,
    "hierarchy": cmd_hierarchy,
    "bench": cmd_bench,
    "validate": cmd_validate,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=os.getenv(LOG_LEVEL_ENV, "INFO").upper(),
        format="%(asctime)s [%(levelname)s] %(message)s",
        datefmt="%H:%M:%S",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", None):
        os.environ[THREADS_ENV] = str(args.threads)

    try:
        return COMMANDS[args.command](args)
    except DisconnectedGraphError as e:
        print(f"error: {e} (use --largest-component to solve on the largest component)",
              file=sys.stderr)
        return EXIT_INVALID
    except (LaplaceAMGError, ValidationError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
