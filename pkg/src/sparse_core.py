"""
Sparse substrate for the solver.

Every coarsening decision (which vertices to eliminate, which aggregate a
vertex joins) is a generalized matrix-vector product

    out_i = (+)_j  A_ij (x) v_j

evaluated over a 2D block grid of the matrix entries. The grid is an
in-process layout: a vertex permutation is applied to rows and columns and
the permuted matrix is cut into even row/column splits. Because every
reduction used here is associative and commutative, results do not depend
on the grid shape or on the permutation.

Usage:
    from src.sparse_core import BlockLayout, PLUS_TIMES, spmv_semiring

    y = spmv_semiring(BlockLayout(2, 2).partition(A), x, PLUS_TIMES)
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np
import scipy.sparse as sp

from src.errors import DimensionMismatchError

logger = logging.getLogger(__name__)

THREADS_ENV = "LAPLACE_AMG_THREADS"
DEFAULT_SEED = 0


def thread_count() -> int:
    """Worker threads used to evaluate grid blocks (``LAPLACE_AMG_THREADS``)."""
    raw = os.getenv(THREADS_ENV, "1")
    try:
        count = int(raw)
    except ValueError:
        logger.warning(f"Ignoring non-integer {THREADS_ENV}={raw!r}")
        return 1
    return max(1, count)


def make_rng(seed: int) -> np.random.Generator:
    """Seeded counter-based generator (Philox 4x64) used everywhere randomness is needed."""
    return np.random.Generator(np.random.Philox(seed))


# =============================================================================
# Permutations
# =============================================================================

@dataclass(frozen=True)
class Permutation:
    """
    A vertex relabelling.

    ``forward[i]`` is the new position of vertex ``i``; ``inverse[p]`` is the
    vertex stored at position ``p``.
    """
    forward: np.ndarray
    inverse: np.ndarray

    def __post_init__(self):
        if self.forward.shape != self.inverse.shape:
            raise DimensionMismatchError("forward and inverse maps differ in length")
        if not np.array_equal(self.forward[self.inverse], np.arange(self.forward.size)):
            raise ValueError("forward and inverse maps are not mutually inverse")

    @classmethod
    def from_forward(cls, forward: np.ndarray) -> Permutation:
        forward = np.asarray(forward, dtype=np.int64)
        inverse = np.empty_like(forward)
        inverse[forward] = np.arange(forward.size, dtype=np.int64)
        return cls(forward, inverse)

    @classmethod
    def identity(cls, n: int) -> Permutation:
        ident = np.arange(n, dtype=np.int64)
        return cls(ident, ident.copy())

    @property
    def size(self) -> int:
        return int(self.forward.size)

    def apply(self, v: np.ndarray) -> np.ndarray:
        """Move entry ``v[i]`` to position ``forward[i]``."""
        return np.asarray(v)[self.inverse]

    def unapply(self, pv: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`apply`."""
        return np.asarray(pv)[self.forward]


def random_permutation(n: int, seed: int = DEFAULT_SEED) -> Permutation:
    """Uniformly shuffled permutation; identical for identical ``(n, seed)``."""
    if n < 0:
        raise ValueError(f"permutation size must be non-negative, got {n}")
    return Permutation.from_forward(make_rng(seed).permutation(n))


# =============================================================================
# Semirings and keyed reduction
# =============================================================================

Reducer = Callable[[np.ndarray, np.ndarray], np.ndarray] | np.ufunc


def reduce_by_key(
    keys: np.ndarray,
    values: np.ndarray,
    add: Reducer,
    identity: Any,
    size: int,
) -> np.ndarray:
    """
    Reduce ``values`` into ``size`` slots selected by ``keys`` with ``add``.

    ``add`` must be associative and commutative with ``identity`` as neutral
    element. Slots that receive no value hold ``identity``. NumPy ufuncs take
    the ``ufunc.at`` path; other reducers are combined pairwise within each
    key segment until one value per key remains.
    """
    out = np.empty(size, dtype=values.dtype)
    out[...] = identity
    if keys.size == 0:
        return out
    if isinstance(add, np.ufunc):
        add.at(out, keys, values)
        return out

    order = np.argsort(keys, kind="stable")
    keys = keys[order]
    vals = values[order]
    while True:
        same_as_next = np.empty(keys.size, dtype=bool)
        same_as_next[:-1] = keys[1:] == keys[:-1]
        same_as_next[-1] = False
        if not same_as_next.any():
            break
        starts = np.flatnonzero(np.r_[True, ~same_as_next[:-1]])
        lengths = np.diff(np.r_[starts, keys.size])
        rank = np.arange(keys.size) - np.repeat(starts, lengths)
        left = rank % 2 == 0
        paired = np.flatnonzero(left & same_as_next)
        kept = np.flatnonzero(left)
        merged = vals[kept].copy()
        merged[np.searchsorted(kept, paired)] = add(vals[paired], vals[paired + 1])
        keys = keys[kept]
        vals = merged
    out[keys] = vals
    return out


@dataclass(frozen=True)
class Semiring:
    """
    Generalized product ``(+).(x)``.

    ``multiply(a, x)`` combines stored matrix values with the gathered vector
    entries of their columns; ``add`` reduces contributions and must be
    associative and commutative with ``identity`` as its neutral element.
    ``block_kernel`` optionally evaluates a whole block at once (for
    semirings scipy can compute directly).
    """
    name: str
    multiply: Callable[[np.ndarray, np.ndarray], np.ndarray]
    add: Reducer
    identity: Any
    dtype: np.dtype
    block_kernel: Callable[[sp.csr_matrix, np.ndarray], np.ndarray] | None = None

    def empty(self, size: int) -> np.ndarray:
        out = np.empty(size, dtype=self.dtype)
        out[...] = self.identity
        return out

    def apply_block(self, block: sp.csr_matrix, x: np.ndarray) -> np.ndarray:
        if block.nnz == 0:
            return self.empty(block.shape[0])
        if self.block_kernel is not None:
            return np.asarray(self.block_kernel(block, x), dtype=self.dtype)
        rows = np.repeat(np.arange(block.shape[0]), np.diff(block.indptr))
        contrib = np.asarray(self.multiply(block.data, x[block.indices]), dtype=self.dtype)
        return reduce_by_key(rows, contrib, self.add, self.identity, block.shape[0])


def _plus_times_kernel(block: sp.csr_matrix, x: np.ndarray) -> np.ndarray:
    return block @ x


def _lor_land_kernel(block: sp.csr_matrix, x: np.ndarray) -> np.ndarray:
    pattern = sp.csr_matrix(
        (np.asarray(block.data != 0, dtype=np.int64), block.indices, block.indptr),
        shape=block.shape,
    )
    return (pattern @ np.asarray(x, dtype=np.int64)) > 0


PLUS_TIMES = Semiring(
    "plus_times",
    multiply=np.multiply,
    add=np.add,
    identity=0.0,
    dtype=np.dtype(np.float64),
    block_kernel=_plus_times_kernel,
)

MIN_PLUS = Semiring(
    "min_plus",
    multiply=np.add,
    add=np.minimum,
    identity=np.inf,
    dtype=np.dtype(np.float64),
)

MAX_TIMES = Semiring(
    "max_times",
    multiply=np.multiply,
    add=np.maximum,
    identity=0.0,
    dtype=np.dtype(np.float64),
)

LOR_LAND = Semiring(
    "lor_land",
    multiply=lambda a, x: (a != 0) & x,
    add=np.logical_or,
    identity=False,
    dtype=np.dtype(bool),
    block_kernel=_lor_land_kernel,
)


# =============================================================================
# 2D block layout
# =============================================================================

def even_splits(n: int, parts: int) -> np.ndarray:
    """Offsets of ``parts`` contiguous ranges over ``0..n``; earlier ranges take the remainder."""
    if parts < 1:
        raise ValueError(f"grid dimension must be >= 1, got {parts}")
    base, extra = divmod(n, parts)
    sizes = np.full(parts, base, dtype=np.int64)
    sizes[:extra] += 1
    return np.concatenate(([0], np.cumsum(sizes)))


@dataclass(frozen=True)
class DistMatrix:
    """
    A sparse matrix cut into a ``grid_rows x grid_cols`` grid of blocks.

    Blocks are stored in permuted, block-local coordinates: entry ``(i, j)``
    of the logical matrix sits in block ``(I, J)`` at
    ``(row_perm.forward[i] - row_offsets[I], col_perm.forward[j] - col_offsets[J])``.
    """
    shape: tuple[int, int]
    grid_rows: int
    grid_cols: int
    row_offsets: np.ndarray
    col_offsets: np.ndarray
    blocks: tuple[tuple[sp.csr_matrix, ...], ...]
    row_perm: Permutation
    col_perm: Permutation

    @property
    def nnz(self) -> int:
        return sum(block.nnz for row in self.blocks for block in row)

    def block(self, i: int, j: int) -> sp.csr_matrix:
        return self.blocks[i][j]


@dataclass(frozen=True)
class BlockLoadStats:
    """Edge-distribution balance of a :class:`DistMatrix`."""
    max_block_nnz: int
    mean_block_nnz: float
    imbalance: float


def block_partition(
    A: sp.spmatrix,
    grid_rows: int = 1,
    grid_cols: int = 1,
    perm: Permutation | None = None,
) -> DistMatrix:
    """
    Distribute the entries of ``A`` over a block grid.

    ``perm`` relabels rows and columns of a square matrix before the cut;
    ``None`` keeps the natural order.
    """
    A = sp.csr_matrix(A)
    nrows, ncols = A.shape
    if perm is None:
        row_perm, col_perm = Permutation.identity(nrows), Permutation.identity(ncols)
    else:
        if nrows != ncols or perm.size != nrows:
            raise DimensionMismatchError(
                f"permutation of size {perm.size} does not fit a {nrows}x{ncols} matrix"
            )
        row_perm = col_perm = perm

    row_offsets = even_splits(nrows, grid_rows)
    col_offsets = even_splits(ncols, grid_cols)

    coo = A.tocoo()
    prow = row_perm.forward[coo.row]
    pcol = col_perm.forward[coo.col]
    brow = np.searchsorted(row_offsets, prow, side="right") - 1
    bcol = np.searchsorted(col_offsets, pcol, side="right") - 1
    block_id = brow * grid_cols + bcol
    order = np.argsort(block_id, kind="stable")
    bounds = np.searchsorted(block_id[order], np.arange(grid_rows * grid_cols + 1))

    blocks = []
    for bi in range(grid_rows):
        row_blocks = []
        height = int(row_offsets[bi + 1] - row_offsets[bi])
        for bj in range(grid_cols):
            width = int(col_offsets[bj + 1] - col_offsets[bj])
            sel = order[bounds[bi * grid_cols + bj]:bounds[bi * grid_cols + bj + 1]]
            block = sp.csr_matrix(
                (coo.data[sel], (prow[sel] - row_offsets[bi], pcol[sel] - col_offsets[bj])),
                shape=(height, width),
            )
            block.sort_indices()
            row_blocks.append(block)
        blocks.append(tuple(row_blocks))

    return DistMatrix(
        shape=(nrows, ncols),
        grid_rows=grid_rows,
        grid_cols=grid_cols,
        row_offsets=row_offsets,
        col_offsets=col_offsets,
        blocks=tuple(blocks),
        row_perm=row_perm,
        col_perm=col_perm,
    )


def reassemble(D: DistMatrix) -> sp.csr_matrix:
    """Concatenate the blocks of ``D`` back into the logical matrix."""
    rows, cols, data = [], [], []
    for bi, row_blocks in enumerate(D.blocks):
        for bj, block in enumerate(row_blocks):
            coo = block.tocoo()
            rows.append(D.row_perm.inverse[coo.row + D.row_offsets[bi]])
            cols.append(D.col_perm.inverse[coo.col + D.col_offsets[bj]])
            data.append(coo.data)
    if not data:
        return sp.csr_matrix(D.shape)
    out = sp.csr_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=D.shape
    )
    out.sort_indices()
    return out


def block_load_stats(D: DistMatrix) -> BlockLoadStats:
    counts = np.array([block.nnz for row in D.blocks for block in row], dtype=np.float64)
    mean = float(counts.mean()) if counts.size else 0.0
    peak = int(counts.max()) if counts.size else 0
    return BlockLoadStats(peak, mean, peak / mean if mean > 0 else 1.0)


@dataclass(frozen=True)
class BlockLayout:
    """Grid shape plus optional vertex permutation used to distribute a matrix."""
    grid_rows: int = 1
    grid_cols: int = 1
    perm: Permutation | None = field(default=None, compare=False)

    @classmethod
    def parse(cls, text: str) -> BlockLayout:
        """Parse ``"RxC"`` (e.g. ``"3x2"``)."""
        try:
            rows, cols = (int(part) for part in text.lower().split("x"))
        except ValueError as e:
            raise ValueError(f"grid must look like RxC, got {text!r}") from e
        if rows < 1 or cols < 1:
            raise ValueError(f"grid dimensions must be >= 1, got {text!r}")
        return cls(rows, cols)

    def with_perm(self, perm: Permutation | None) -> BlockLayout:
        return BlockLayout(self.grid_rows, self.grid_cols, perm)

    def partition(self, A: sp.spmatrix) -> DistMatrix:
        return block_partition(A, self.grid_rows, self.grid_cols, self.perm)


# =============================================================================
# Products
# =============================================================================

def spmv_semiring(A: DistMatrix | sp.spmatrix, v: np.ndarray, sr: Semiring) -> np.ndarray:
    """
    Generalized product ``A (+).(x) v``.

    Blocks are evaluated independently (on ``LAPLACE_AMG_THREADS`` workers)
    and their partial rows combined with ``sr.add``.
    """
    if not isinstance(A, DistMatrix):
        A = block_partition(A)
    v = np.asarray(v)
    if v.shape[0] != A.shape[1]:
        raise DimensionMismatchError(
            f"vector of length {v.shape[0]} does not match {A.shape[0]}x{A.shape[1]} matrix"
        )

    pv = A.col_perm.apply(v)
    tasks = [(bi, bj) for bi in range(A.grid_rows) for bj in range(A.grid_cols)]

    def run(task: tuple[int, int]) -> np.ndarray:
        bi, bj = task
        x = pv[A.col_offsets[bj]:A.col_offsets[bj + 1]]
        return sr.apply_block(A.blocks[bi][bj], x)

    workers = min(thread_count(), len(tasks))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(run, tasks))
    else:
        partials = [run(task) for task in tasks]

    pout = sr.empty(A.shape[0])
    for bi in range(A.grid_rows):
        acc = sr.empty(int(A.row_offsets[bi + 1] - A.row_offsets[bi]))
        for bj in range(A.grid_cols):
            acc = sr.add(acc, partials[bi * A.grid_cols + bj])
        pout[A.row_offsets[bi]:A.row_offsets[bi + 1]] = acc
    return A.row_perm.unapply(pout)


def spgemm(A: sp.spmatrix, B: sp.spmatrix) -> sp.csr_matrix:
    """Standard sparse product; entries that cancel to exactly zero are dropped."""
    if A.shape[1] != B.shape[0]:
        raise DimensionMismatchError(f"cannot multiply {A.shape} by {B.shape}")
    C = sp.csr_matrix(A @ B)
    C.eliminate_zeros()
    C.sort_indices()
    return C


def transpose(A: sp.spmatrix) -> sp.csr_matrix:
    T = sp.csr_matrix(A.T)
    T.sort_indices()
    return T
