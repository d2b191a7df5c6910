"""
Graph ingestion and Laplacian construction.

A weighted undirected graph G = (V, E, w) with w > 0 maps to L = D - A,
where A is the weighted adjacency matrix and D the diagonal of vertex
degrees. Laplacians built here are symmetric, have non-positive
off-diagonals and zero row sums; ``validate_laplacian`` checks exactly
those properties (positive semi-definiteness follows from them).

Supported input formats:
- Matrix Market coordinate files (general or symmetric, real/integer or pattern)
- Edge lists: ``u v [w]`` per line, 0-based, ``#`` comments; an optional
  ``# n: <count>`` header fixes the vertex count
"""

import logging
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from src.errors import DisconnectedGraphError, GraphFormatError, GraphValidationError
from src.sparse_core import LOR_LAND, BlockLayout, spmv_semiring

logger = logging.getLogger(__name__)

MATRIX_MARKET = "matrix-market"
EDGE_LIST = "edge-list"
VALID_FORMATS = {MATRIX_MARKET, EDGE_LIST}
MATRIX_MARKET_SUFFIXES = {".mtx", ".mm"}
VERTEX_COUNT_HEADER = re.compile(r"^#\s*n:\s*(\d+)\s*$")

# Relative tolerance used by the structural checks.
DEFAULT_TOLERANCE = 1e-12


# =============================================================================
# Graphs
# =============================================================================

@dataclass(frozen=True)
class Graph:
    """Undirected weighted graph stored as parallel edge arrays (each edge once)."""
    n: int
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    dropped_self_loops: int = 0

    @classmethod
    def from_edges(cls, n: int, edges, dropped_self_loops: int = 0) -> "Graph":
        """Build from ``(u, v)`` or ``(u, v, w)`` tuples; missing weights default to 1."""
        edges = list(edges)
        u = np.array([e[0] for e in edges], dtype=np.int64)
        v = np.array([e[1] for e in edges], dtype=np.int64)
        w = np.array([e[2] if len(e) > 2 else 1.0 for e in edges], dtype=np.float64)
        return cls(n, u, v, w, dropped_self_loops)

    @property
    def num_edges(self) -> int:
        return int(self.u.size)

    def edges(self) -> list[tuple[int, int, float]]:
        return [(int(a), int(b), float(c)) for a, b, c in zip(self.u, self.v, self.w)]


def validate_graph(g: Graph) -> None:
    """Raise :class:`GraphValidationError` unless ``g`` satisfies the Graph invariants."""
    if g.n < 0:
        raise GraphValidationError(f"vertex count must be non-negative, got {g.n}")
    if not (g.u.shape == g.v.shape == g.w.shape):
        raise GraphValidationError("edge arrays differ in length")
    if g.num_edges == 0:
        return
    if min(g.u.min(), g.v.min()) < 0 or max(g.u.max(), g.v.max()) >= g.n:
        raise GraphValidationError(f"edge endpoint out of range 0..{g.n - 1}")
    loops = np.flatnonzero(g.u == g.v)
    if loops.size:
        raise GraphValidationError(f"self-loop on vertex {int(g.u[loops[0]])}")
    bad = np.flatnonzero(~(g.w > 0))
    if bad.size:
        k = int(bad[0])
        raise GraphValidationError(
            f"nonpositive weight {g.w[k]} on edge ({int(g.u[k])}, {int(g.v[k])})"
        )


def _adjacency(g: Graph) -> sp.csr_matrix:
    upper = sp.coo_matrix((g.w, (g.u, g.v)), shape=(g.n, g.n))
    A = sp.csr_matrix(upper + upper.T)
    A.sum_duplicates()
    return A


def laplacian_from_graph(g: Graph) -> sp.csr_matrix:
    """L = D - A; parallel edges are summed."""
    validate_graph(g)
    A = _adjacency(g)
    degree = np.asarray(A.sum(axis=1)).ravel()
    L = sp.csr_matrix(sp.diags(degree) - A)
    L.eliminate_zeros()
    L.sort_indices()
    return L


def laplacian_to_graph(L: sp.spmatrix) -> Graph:
    """Recover the graph whose Laplacian is ``L`` (strict upper triangle, negated)."""
    upper = sp.triu(sp.csr_matrix(L), k=1).tocoo()
    keep = upper.data != 0
    return Graph(
        L.shape[0],
        upper.row[keep].astype(np.int64),
        upper.col[keep].astype(np.int64),
        -upper.data[keep].astype(np.float64),
    )


def enforce_zero_row_sums(L: sp.spmatrix) -> sp.csr_matrix:
    """
    Reset the diagonal to minus the off-diagonal row sums.

    Coarse operators are Laplacians in exact arithmetic; recomputing the
    diagonal keeps the constant vector in their nullspace to round-off.
    """
    L = sp.csr_matrix(L)
    off = L - sp.diags(L.diagonal())
    off = sp.csr_matrix(off)
    off.eliminate_zeros()
    out = sp.csr_matrix(off - sp.diags(np.asarray(off.sum(axis=1)).ravel()))
    out.eliminate_zeros()
    out.sort_indices()
    return out


# =============================================================================
# Validation
# =============================================================================

@dataclass
class ValidationResult:
    """Result of Laplacian validation."""
    is_valid: bool
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def __str__(self) -> str:
        lines = ["Laplacian is valid" if self.is_valid else "Laplacian validation failed"]
        if self.errors:
            lines.append(f"\nErrors ({len(self.errors)}):")
            lines.extend(f"  - {err}" for err in self.errors)
        if self.warnings:
            lines.append(f"\nWarnings ({len(self.warnings)}):")
            lines.extend(f"  - {warn}" for warn in self.warnings)
        return "\n".join(lines)


class LaplacianValidator:
    """Checks symmetry, sign pattern and zero row sums of a square matrix."""

    # Violations listed individually before being summarized.
    MAX_REPORTED = 10

    def __init__(self, tolerance: float = DEFAULT_TOLERANCE):
        self.tolerance = tolerance
        self.errors: list[str] = []
        self.warnings: list[str] = []

    def validate(self, L: sp.spmatrix) -> ValidationResult:
        self.errors = []
        self.warnings = []

        L = sp.csr_matrix(L)
        if L.shape[0] != L.shape[1]:
            self.errors.append(f"matrix is not square: {L.shape[0]}x{L.shape[1]}")
            return ValidationResult(False, self.errors, self.warnings)

        diag = L.diagonal()
        scale = float(np.abs(diag).max()) if diag.size else 0.0

        self._check_row_sums(L, scale)
        self._check_signs(L, diag)
        self._check_symmetry(L, scale)

        return ValidationResult(not self.errors, self.errors, self.warnings)

    def _report(self, kind: str, indices: np.ndarray, describe) -> None:
        for i in indices[: self.MAX_REPORTED]:
            self.errors.append(describe(int(i)))
        if indices.size > self.MAX_REPORTED:
            self.errors.append(f"... {indices.size - self.MAX_REPORTED} more {kind} violations")

    def _check_row_sums(self, L: sp.csr_matrix, scale: float) -> None:
        sums = np.asarray(L.sum(axis=1)).ravel()
        bad = np.flatnonzero(np.abs(sums) > self.tolerance * scale)
        self._report("row-sum", bad, lambda i: f"row-sum violation on row {i}: {sums[i]:.3e}")

    def _check_signs(self, L: sp.csr_matrix, diag: np.ndarray) -> None:
        coo = L.tocoo()
        off = (coo.row != coo.col) & (coo.data > 0)
        for r, c, val in list(zip(coo.row[off], coo.col[off], coo.data[off]))[: self.MAX_REPORTED]:
            self.errors.append(f"sign violation: positive off-diagonal L[{r},{c}] = {val:.3e}")
        if off.sum() > self.MAX_REPORTED:
            self.errors.append(f"... {int(off.sum()) - self.MAX_REPORTED} more sign violations")
        neg = np.flatnonzero(diag < 0)
        self._report("sign", neg, lambda i: f"sign violation: negative diagonal L[{i},{i}]")

    def _check_symmetry(self, L: sp.csr_matrix, scale: float) -> None:
        diff = sp.csr_matrix(L - L.T)
        if diff.nnz == 0:
            return
        worst = float(np.abs(diff.data).max())
        if worst > self.tolerance * max(scale, 1.0):
            self.errors.append(f"matrix is not symmetric: max |L - L^T| = {worst:.3e}")


def validate_laplacian(L: sp.spmatrix, tolerance: float = DEFAULT_TOLERANCE) -> ValidationResult:
    """Check row sums, sign pattern and symmetry; violations are returned, not raised."""
    return LaplacianValidator(tolerance).validate(L)


# =============================================================================
# Connectivity
# =============================================================================

def is_connected(L: sp.spmatrix, layout: BlockLayout | None = None) -> bool:
    """Frontier expansion from vertex 0 by repeated (or, and) products with the pattern of L."""
    n = L.shape[0]
    if n <= 1:
        return True
    D = (layout or BlockLayout()).partition(L)
    reached = np.zeros(n, dtype=bool)
    reached[0] = True
    frontier = reached.copy()
    while frontier.any():
        frontier = spmv_semiring(D, frontier, LOR_LAND) & ~reached
        reached |= frontier
    return bool(reached.all())


def require_connected(L: sp.spmatrix, layout: BlockLayout | None = None) -> None:
    if not is_connected(L, layout):
        raise DisconnectedGraphError("graph is disconnected")


def largest_component(g: Graph) -> tuple[Graph, np.ndarray]:
    """
    Restrict ``g`` to its largest connected component; also returns the kept vertex ids.

    The component is cut out of the Laplacian and turned back into a graph,
    so parallel edges come back merged.
    """
    L = laplacian_from_graph(g)
    count, labels = connected_components(L, directed=False)
    if count <= 1:
        return g, np.arange(g.n, dtype=np.int64)
    sizes = np.bincount(labels)
    keep = np.flatnonzero(labels == int(np.argmax(sizes)))
    logger.warning(f"Keeping largest component: {keep.size} of {g.n} vertices ({count} components)")
    sub = laplacian_to_graph(L[keep][:, keep])
    return replace(sub, dropped_self_loops=g.dropped_self_loops), keep


# =============================================================================
# File formats
# =============================================================================

def detect_format(path: Path) -> str:
    return MATRIX_MARKET if Path(path).suffix.lower() in MATRIX_MARKET_SUFFIXES else EDGE_LIST


def load_graph(path: str | Path, fmt: str | None = None) -> Graph:
    """
    Read a graph file.

    Self-loops are dropped (counted in ``Graph.dropped_self_loops``);
    negative weights are an error; entries stored in one triangle only are
    mirrored.
    """
    path = Path(path)
    fmt = fmt or detect_format(path)
    if fmt not in VALID_FORMATS:
        raise ValueError(f"unknown graph format {fmt!r}; expected one of {sorted(VALID_FORMATS)}")
    if not path.is_file():
        raise FileNotFoundError(f"File not found: {path}")
    if fmt == MATRIX_MARKET:
        return _load_matrix_market(path)
    return _load_edge_list(path)


def _finish(n: int, u: np.ndarray, v: np.ndarray, w: np.ndarray, source: Path) -> Graph:
    loops = u == v
    dropped = int(loops.sum())
    if dropped:
        logger.warning(f"Dropped {dropped} self-loop(s) from {source.name}")
    zero = ~loops & (w == 0)
    if zero.any():
        logger.warning(f"Dropped {int(zero.sum())} zero-weight entries from {source.name}")
    keep = ~loops & ~zero
    return Graph(n, u[keep], v[keep], w[keep], dropped)


def _load_edge_list(path: Path) -> Graph:
    u, v, w = [], [], []
    declared_n = None
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            header = VERTEX_COUNT_HEADER.match(raw.strip())
            if header:
                declared_n = int(header.group(1))
                continue
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise GraphFormatError(f"expected 'u v [w]', got {raw.strip()!r}", lineno)
            try:
                a, b = int(parts[0]), int(parts[1])
                weight = float(parts[2]) if len(parts) == 3 else 1.0
            except ValueError as e:
                raise GraphFormatError(str(e), lineno) from e
            if a < 0 or b < 0:
                raise GraphFormatError(f"negative vertex index in {raw.strip()!r}", lineno)
            if weight < 0:
                raise GraphFormatError(f"negative weight {weight}", lineno)
            u.append(a)
            v.append(b)
            w.append(weight)
    u_arr = np.array(u, dtype=np.int64)
    v_arr = np.array(v, dtype=np.int64)
    n = int(max(u_arr.max(), v_arr.max()) + 1) if u else 0
    if declared_n is not None:
        if declared_n < n:
            raise GraphFormatError(
                f"header declares {declared_n} vertices but index {n - 1} is used")
        n = declared_n
    return _finish(n, u_arr, v_arr, np.array(w, dtype=np.float64), path)


def _first_bad_entry_line(path: Path) -> int | None:
    """Locate the first malformed data line of a Matrix Market file (1-based)."""
    seen_size = False
    with open(path, "r", encoding="utf-8", errors="replace") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("%"):
                continue
            parts = line.split()
            try:
                [float(p) for p in parts]
            except ValueError:
                return lineno
            if not seen_size:
                seen_size = True
                if len(parts) != 3:
                    return lineno
            elif len(parts) not in (2, 3):
                return lineno
    return None


def _load_matrix_market(path: Path) -> Graph:
    try:
        rows, cols, _entries, fmt, field_, symmetry = scipy.io.mminfo(str(path))
    except Exception as e:
        raise GraphFormatError(f"invalid Matrix Market header: {e}", 1) from e
    if fmt != "coordinate":
        raise GraphFormatError(f"only coordinate Matrix Market files are supported, got {fmt}")
    if rows != cols:
        raise GraphFormatError(f"Matrix Market matrix is not square: {rows}x{cols}")
    if field_ == "complex":
        raise GraphFormatError("complex Matrix Market matrices are not supported")

    try:
        M = sp.coo_matrix(scipy.io.mmread(str(path)))
    except Exception as e:
        raise GraphFormatError(f"could not parse entries: {e}", _first_bad_entry_line(path)) from e

    if field_ == "pattern":
        data = np.ones(M.nnz, dtype=np.float64)
    else:
        data = M.data.astype(np.float64)
        if np.any(data < 0):
            raise GraphFormatError("negative edge weight")

    loops = M.row == M.col
    dropped = int(loops.sum())
    if dropped:
        logger.warning(f"Dropped {dropped} self-loop(s) from {path.name}")
    off = ~loops
    A = sp.coo_matrix((data[off], (M.row[off], M.col[off])), shape=(rows, rows)).tocsr()
    A.sum_duplicates()
    # Mirror one-triangle storage; when both triangles are present keep the larger weight.
    upper = sp.triu(A, k=1).tocsr().maximum(sp.triu(A.T, k=1).tocsr()).tocoo()
    g = _finish(rows, upper.row.astype(np.int64), upper.col.astype(np.int64),
                upper.data.astype(np.float64), path)
    return replace(g, dropped_self_loops=dropped)


def write_edge_list(g: Graph, path: str | Path) -> None:
    """Write ``g`` in the edge-list format (``u v w`` per line)."""
    path = Path(path)
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"# n: {g.n}\n")
        f.write(f"# {g.num_edges} edges\n")
        for a, b, c in zip(g.u, g.v, g.w):
            f.write(f"{int(a)} {int(b)} {float(c)!r}\n")
