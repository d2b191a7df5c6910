"""
Low-degree elimination.

Vertices of degree <= ``max_degree`` are candidates. A candidate is
eliminated when its hashed id is the smallest among the candidates in its
closed neighborhood, which makes the eliminated set F independent. With F
ordered first, L_FF is diagonal and

    L = [L_FF  L_FC]      L_next = L_CC - L_FC^T L_FF^-1 L_FC
        [L_CF  L_CC]      P      = [-L_FF^-1 L_FC ; I]

is an exact two-level transfer: restriction is P^T b and interpolation
adds the F-point correction L_FF^-1 b_F.

The selection is one semiring product ``z = L (+).(x) c`` where ``c_i`` is
``i`` for candidates and the null candidate otherwise; (x) passes the
candidate through on every stored entry (the diagonal makes each
neighborhood contain its own vertex) and (+) keeps the smaller hash.
F = {i : z_i = i}.
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from src.errors import DimensionMismatchError, NotIndependentError
from src.laplacian import enforce_zero_row_sums
from src.sparse_core import BlockLayout, Permutation, Semiring, spmv_semiring

logger = logging.getLogger(__name__)

DEFAULT_MAX_DEGREE = 4
# Payload of a vertex that is not an elimination candidate.
NULL_CANDIDATE = -1

# splitmix64 finalizer constants (see docs/FORMATS.md).
HASH_INCREMENT = np.uint64(0x9E3779B97F4A7C15)
HASH_MULT_1 = np.uint64(0xBF58476D1CE4E5B9)
HASH_MULT_2 = np.uint64(0x94D049BB133111EB)


def hash64(ids) -> np.ndarray:
    """Bijective 64-bit mix of vertex ids (splitmix64 output function)."""
    z = np.asarray(ids, dtype=np.int64).astype(np.uint64)
    with np.errstate(over="ignore"):
        z = z + HASH_INCREMENT
        z = (z ^ (z >> np.uint64(30))) * HASH_MULT_1
        z = (z ^ (z >> np.uint64(27))) * HASH_MULT_2
        z = z ^ (z >> np.uint64(31))
    return z


def elimination_semiring(hashes: np.ndarray) -> Semiring:
    """(min-hash, pass-through) semiring over candidate ids; ties go to the smaller id."""
    hashes = np.asarray(hashes, dtype=np.uint64)

    def multiply(a: np.ndarray, c: np.ndarray) -> np.ndarray:
        return np.where(a != 0, c, NULL_CANDIDATE)

    def add(p: np.ndarray, q: np.ndarray) -> np.ndarray:
        hp = hashes[np.where(p >= 0, p, 0)]
        hq = hashes[np.where(q >= 0, q, 0)]
        p_wins = (p >= 0) & ((q < 0) | (hp < hq) | ((hp == hq) & (p < q)))
        return np.where(p_wins, p, q)

    return Semiring("min_hash", multiply=multiply, add=add, identity=NULL_CANDIDATE,
                    dtype=np.dtype(np.int64))


def off_diagonal_degree(L: sp.spmatrix) -> np.ndarray:
    coo = sp.coo_matrix(L)
    off = (coo.row != coo.col) & (coo.data != 0)
    return np.bincount(coo.row[off], minlength=L.shape[0])


def select_elimination(
    L: sp.spmatrix,
    max_degree: int = DEFAULT_MAX_DEGREE,
    layout: BlockLayout | None = None,
    hashes: np.ndarray | None = None,
) -> np.ndarray:
    """Sorted ids of the vertices to eliminate."""
    L = sp.csr_matrix(L)
    n = L.shape[0]
    if hashes is None:
        hashes = hash64(np.arange(n))
    elif len(hashes) != n:
        raise DimensionMismatchError(f"{len(hashes)} hashes for {n} vertices")

    ids = np.arange(n, dtype=np.int64)
    candidates = np.where(off_diagonal_degree(L) <= max_degree, ids, NULL_CANDIDATE)
    D = (layout or BlockLayout()).partition(L)
    z = spmv_semiring(D, candidates, elimination_semiring(hashes))
    return np.flatnonzero(z == ids)


@dataclass(frozen=True)
class EliminationLevel:
    """
    One exact elimination step.

    ``P`` is ``n x |C|`` in the original vertex order; ``perm`` is the
    F-first ordering it was assembled in.
    """
    fine: np.ndarray
    coarse: np.ndarray
    perm: Permutation
    P: sp.csr_matrix
    dinv_ff: np.ndarray
    L_fc: sp.csr_matrix
    L_next: sp.csr_matrix

    kind = "elimination"

    @property
    def n(self) -> int:
        return self.P.shape[0]

    @property
    def n_next(self) -> int:
        return self.P.shape[1]


def build_elimination_level(L: sp.spmatrix, F) -> EliminationLevel:
    """Schur complement onto the complement of ``F``."""
    L = sp.csr_matrix(L)
    n = L.shape[0]
    F = np.unique(np.asarray(F, dtype=np.int64))
    if F.size and (F[0] < 0 or F[-1] >= n):
        raise DimensionMismatchError(f"elimination set outside 0..{n - 1}")
    in_f = np.zeros(n, dtype=bool)
    in_f[F] = True
    C = np.flatnonzero(~in_f)

    L_ff = L[F][:, F]
    off_ff = sp.coo_matrix(L_ff - sp.diags(L_ff.diagonal()))
    off_ff.eliminate_zeros()
    if off_ff.nnz:
        a, b = F[off_ff.row[0]], F[off_ff.col[0]]
        raise NotIndependentError(f"eliminated vertices {a} and {b} are adjacent")

    forward = np.empty(n, dtype=np.int64)
    forward[F] = np.arange(F.size)
    forward[C] = F.size + np.arange(C.size)
    perm = Permutation.from_forward(forward)

    if F.size == 0:
        I = sp.identity(n, format="csr")
        return EliminationLevel(F, C, perm, I, np.zeros(0), sp.csr_matrix((0, n)), L)

    dinv = 1.0 / L_ff.diagonal()
    L_fc = sp.csr_matrix(L[F][:, C])
    L_cc = sp.csr_matrix(L[C][:, C])

    schur = L_cc - L_fc.T @ sp.diags(dinv) @ L_fc
    schur = 0.5 * (schur + schur.T)
    L_next = enforce_zero_row_sums(schur)

    stacked = sp.vstack([-sp.diags(dinv) @ L_fc, sp.identity(C.size)], format="csr")
    P = sp.csr_matrix(stacked[forward])
    P.eliminate_zeros()
    P.sort_indices()

    logger.debug(f"Eliminated {F.size} of {n} vertices; coarse nnz {L_next.nnz}")
    return EliminationLevel(F, C, perm, P, dinv, L_fc, L_next)


def elim_restrict(level: EliminationLevel, b: np.ndarray) -> np.ndarray:
    """b_next = P^T b."""
    if b.shape[0] != level.n:
        raise DimensionMismatchError(f"vector of length {b.shape[0]} for level of size {level.n}")
    return level.P.T @ b


def elim_prolong(level: EliminationLevel, x_next: np.ndarray, b: np.ndarray) -> np.ndarray:
    """x = P x_next with the F rows corrected by L_FF^-1 b_F."""
    if x_next.shape[0] != level.n_next or b.shape[0] != level.n:
        raise DimensionMismatchError(
            f"vectors of length {x_next.shape[0]}/{b.shape[0]} for level {level.n}->{level.n_next}"
        )
    x = level.P @ x_next
    if level.fine.size:
        x[level.fine] += level.dinv_ff * b[level.fine]
    return x
