"""
Graph Laplacian Solver MCP Server

Exposes hierarchy setup and multigrid solves of graph Laplacian systems
L x = b as tools. Built hierarchies are immutable and kept in memory by id,
so one setup can serve many solves.

Graphs come from files (Matrix Market or edge list) or from the named
fixtures (p3, p4, star6, k3) and the benchmark suites.

Tools are registered with ``mcp.tool(fn)`` after their definitions instead of
the ``@mcp.tool`` decorator: the decorator replaces each function with a
``FunctionTool`` object, while the tests import and call the plain
functions.
"""

import logging
import os
from pathlib import Path
from typing import Any
from uuid import uuid4

import numpy as np
from fastmcp import FastMCP
from pydantic import ValidationError

from src import graphs
from src.errors import LaplaceAMGError
from src.harness import SUITES, make_rhs, run_bench, run_solve
from src.hierarchy import Hierarchy, setup_hierarchy
from src.laplacian import (
    Graph,
    is_connected,
    laplacian_from_graph,
    largest_component as extract_largest_component,
    load_graph,
    validate_laplacian,
)
from src.solver_schema import SolverParams, report_json_schema

LOG_LEVEL_ENV = "LAPLACE_AMG_LOG_LEVEL"

# Configure logging
logging.basicConfig(
    level=os.getenv(LOG_LEVEL_ENV, "INFO").upper(),
    format="%(asctime)s [%(levelname)s] %(message)s",
    datefmt="%H:%M:%S"
)
logger = logging.getLogger(__name__)

# Initialize MCP server
mcp = FastMCP(
    "laplace-amg",
    instructions="""
    Graph Laplacian solver - multigrid-preconditioned Krylov solves of L x = b.

    Workflow:
    1. Use validate_graph to check a graph file (optional)
    2. Use setup_solver with a graph file or a fixture name to build a hierarchy
    3. Use solve with the returned hierarchy_id (repeat with other right-hand sides)
    4. Use describe_hierarchy to inspect levels, delete_hierarchy to free memory

    Parameters accepted by setup_solver follow get_report_schema()["$defs"]["SolverParams"].
    """,
)

# Built hierarchies by ID: {"hierarchy": Hierarchy, "name": str, "dropped_self_loops": int}
_hierarchies: dict[str, dict[str, Any]] = {}

# Maximum number of hierarchies to keep in memory (oldest evicted first)
_MAX_HIERARCHIES = 8


def _error(message: str) -> dict[str, Any]:
    logger.error(message)
    return {"status": "error", "message": message}


def _resolve_graph(graph_path: str | None, fixture: str | None,
                   format: str | None) -> tuple[Graph, str]:
    if fixture:
        if fixture in graphs.FIXTURES:
            return graphs.FIXTURES[fixture](), fixture
        for suite in SUITES.values():
            for name, factory in suite:
                if name == fixture:
                    return factory(), name
        raise ValueError(f"unknown fixture {fixture!r}")
    if not graph_path:
        raise ValueError("either graph_path or fixture is required")
    return load_graph(graph_path, format), Path(graph_path).name


def validate_graph(graph_path: str, format: str | None = None) -> dict[str, Any]:
    """
    Load a graph file and check its Laplacian.

    Args:
        graph_path: Path to a Matrix Market (.mtx) or edge-list file
        format: "matrix-market" or "edge-list" (detected from the extension when omitted)

    Returns:
        Validation result with errors, warnings, connectivity and sizes
    """
    try:
        g = load_graph(graph_path, format)
        L = laplacian_from_graph(g)
    except (LaplaceAMGError, OSError, ValueError) as e:
        return _error(f"Could not load {graph_path}: {e}")

    result = validate_laplacian(L)
    connected = is_connected(L)
    warnings = list(result.warnings)
    if g.dropped_self_loops:
        warnings.append(f"{g.dropped_self_loops} self-loop(s) dropped")
    if not connected:
        warnings.append("graph is disconnected")
    return {
        "status": "success",
        "is_valid": result.is_valid,
        "connected": connected,
        "n": L.shape[0],
        "nnz": L.nnz,
        "errors": result.errors,
        "warnings": warnings,
    }


def setup_solver(
    graph_path: str | None = None,
    fixture: str | None = None,
    format: str | None = None,
    params: dict[str, Any] | None = None,
    largest_component: bool = False,
) -> dict[str, Any]:
    """
    Build a multigrid hierarchy for a graph Laplacian.

    Args:
        graph_path: Graph file to load
        fixture: Named fixture or benchmark graph instead of a file (e.g. "grid16x16")
        format: "matrix-market" or "edge-list" for graph_path
        params: Solver parameters (tol, cycle, cheby_degree, coarse_nnz, seed, ...)
        largest_component: Solve on the largest connected component of a disconnected graph

    Returns:
        hierarchy_id plus the per-level table
    """
    global _hierarchies

    try:
        solver_params = SolverParams.model_validate(params or {})
    except ValidationError as e:
        return _error(f"Invalid parameters: {e}")

    try:
        g, name = _resolve_graph(graph_path, fixture, format)
        if largest_component:
            g, _kept = extract_largest_component(g)
        L = laplacian_from_graph(g)
        h = setup_hierarchy(L, solver_params)
    except (LaplaceAMGError, OSError, ValueError) as e:
        return _error(f"Setup failed: {e}")

    hierarchy_id = str(uuid4())[:8]

    # Evict the oldest hierarchy when at capacity
    if len(_hierarchies) >= _MAX_HIERARCHIES:
        oldest_id = next(iter(_hierarchies))
        del _hierarchies[oldest_id]
        logger.debug(f"Evicted hierarchy: {oldest_id}")

    _hierarchies[hierarchy_id] = {
        "hierarchy": h,
        "name": name,
        "dropped_self_loops": g.dropped_self_loops,
    }
    logger.info(f"Hierarchy created: {hierarchy_id} for {name}")
    return {
        "status": "success",
        "message": f"Hierarchy built for {name}",
        "hierarchy_id": hierarchy_id,
        **_describe(h),
    }


def _describe(h: Hierarchy) -> dict[str, Any]:
    return {
        "n": h.operators[0].shape[0],
        "nnz": h.operators[0].nnz,
        "levels": [row.model_dump() for row in h.level_info()],
        "operator_complexity": h.operator_complexity(),
        "stalled": h.stalled,
        "setup_seconds": h.setup_seconds,
    }


def solve(
    hierarchy_id: str,
    rhs: str = "random",
    rhs_values: list[float] | None = None,
    seed: int = 0,
    return_solution: bool = False,
) -> dict[str, Any]:
    """
    Solve L x = b with a stored hierarchy.

    Args:
        hierarchy_id: ID returned by setup_solver
        rhs: "random" (zero-mean normal) or "lowmodes" (smooth eigenvector mix)
        rhs_values: Explicit right-hand side; overrides rhs
        seed: Seed for generated right-hand sides
        return_solution: Include x in the response

    Returns:
        Solve report (residual history, iterations, WDA, TDA, ...)
    """
    entry = _hierarchies.get(hierarchy_id)
    if entry is None:
        return _error(f"Hierarchy ID '{hierarchy_id}' not found.")
    h: Hierarchy = entry["hierarchy"]
    L = h.operators[0]

    try:
        if rhs_values is not None:
            b = np.asarray(rhs_values, dtype=np.float64)
        else:
            b = make_rhs(L, rhs, seed)
        x, report, _h = run_solve(L, b, h.params, entry["name"], hierarchy=h,
                                  dropped_self_loops=entry["dropped_self_loops"])
    except (LaplaceAMGError, ValueError) as e:
        return _error(f"Solve failed: {e}")

    response = {"status": "success", "report": report.model_dump(mode="json")}
    if return_solution:
        response["x"] = x.tolist()
    return response


def describe_hierarchy(hierarchy_id: str) -> dict[str, Any]:
    """
    Per-level table of a stored hierarchy.

    Args:
        hierarchy_id: ID returned by setup_solver
    """
    entry = _hierarchies.get(hierarchy_id)
    if entry is None:
        return _error(f"Hierarchy ID '{hierarchy_id}' not found.")
    return {
        "status": "success",
        "hierarchy_id": hierarchy_id,
        "graph": entry["name"],
        "params": entry["hierarchy"].params.model_dump(),
        **_describe(entry["hierarchy"]),
    }


def list_hierarchies() -> dict[str, Any]:
    """List all hierarchies currently stored in memory."""
    items = []
    for hierarchy_id, entry in _hierarchies.items():
        h: Hierarchy = entry["hierarchy"]
        items.append({
            "hierarchy_id": hierarchy_id,
            "graph": entry["name"],
            "n": h.operators[0].shape[0],
            "levels": h.num_levels,
        })
    return {"status": "success", "count": len(items), "hierarchies": items}


def delete_hierarchy(hierarchy_id: str) -> dict[str, Any]:
    """
    Delete a hierarchy from memory.

    Args:
        hierarchy_id: ID of the hierarchy to delete
    """
    global _hierarchies

    if hierarchy_id not in _hierarchies:
        return _error(f"Hierarchy ID '{hierarchy_id}' not found.")
    name = _hierarchies.pop(hierarchy_id)["name"]
    return {
        "status": "success",
        "message": f"Hierarchy for {name} (ID: {hierarchy_id}) deleted.",
        "remaining_count": len(_hierarchies),
    }


def run_benchmark(suite: str = "small", params: dict[str, Any] | None = None) -> dict[str, Any]:
    """
    Run a benchmark suite and return one row per graph.

    Args:
        suite: "small" (seconds) or "desk" (minutes)
        params: Solver parameters applied to every graph
    """
    try:
        solver_params = SolverParams.model_validate(params or {})
        rows = run_bench(suite, solver_params)
    except ValidationError as e:
        return _error(f"Invalid parameters: {e}")
    except (LaplaceAMGError, ValueError) as e:
        return _error(f"Benchmark failed: {e}")
    return {"status": "success", "suite": suite, "rows": rows}


def get_report_schema() -> dict[str, Any]:
    """JSON Schema of the solve report (includes the SolverParams definition)."""
    return report_json_schema()


for _tool in (
    validate_graph,
    setup_solver,
    solve,
    describe_hierarchy,
    list_hierarchies,
    delete_hierarchy,
    run_benchmark,
    get_report_schema,
):
    mcp.tool(_tool)


def main():
    """Entry point for the laplace-amg-mcp command."""
    mcp.run()


if __name__ == "__main__":
    main()
