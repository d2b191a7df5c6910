"""
Affinity strength of connection.

A few random vectors are smoothed toward the near-nullspace of L with
damped Jacobi. Vertices whose smoothed values move together get a high
affinity; the normalized affinity matrix S drives aggregation.

    C_ij = (x_i . x_j)^2 / (|x_i|^2 |x_j|^2)        on the adjacency pattern
    S_ij = C_ij / max(max_s C_is, max_s C_sj)
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from src.errors import GraphValidationError
from src.sparse_core import MAX_TIMES, BlockLayout, make_rng, spmv_semiring, transpose

logger = logging.getLogger(__name__)

DEFAULT_TEST_VECTORS = 4
DEFAULT_SWEEPS = 3
DEFAULT_OMEGA = 2.0 / 3.0
# Regeneration attempts for a test vector that smooths to zero.
MAX_REGENERATIONS = 5


@dataclass(frozen=True)
class TestVectors:
    """Smoothed test vectors, one per column of ``X``; ``matvecs`` counts applications of L."""
    __test__ = False

    X: np.ndarray
    matvecs: int


def _inverse_diagonal(L: sp.csr_matrix) -> np.ndarray:
    diag = L.diagonal()
    zero = np.flatnonzero(diag == 0)
    if zero.size:
        raise GraphValidationError(f"zero diagonal at vertex {int(zero[0])} (isolated vertex)")
    return 1.0 / diag


def jacobi_sweeps(L: sp.csr_matrix, x: np.ndarray, sweeps: int, omega: float,
                  dinv: np.ndarray | None = None) -> np.ndarray:
    """``sweeps`` damped-Jacobi steps on ``L x = 0``."""
    if dinv is None:
        dinv = _inverse_diagonal(L)
    for _ in range(sweeps):
        x = x - omega * dinv * (L @ x)
    return x


def test_vectors(
    L: sp.spmatrix,
    m: int = DEFAULT_TEST_VECTORS,
    sweeps: int = DEFAULT_SWEEPS,
    seed: int = 0,
    omega: float = DEFAULT_OMEGA,
    start: np.ndarray | None = None,
) -> TestVectors:
    """
    Smooth ``m`` random vectors ``sweeps`` times each.

    Entries start uniform in (-1, 1); ``start`` overrides the random start
    (shape ``n x m``). A column that smooths to exactly zero is redrawn with
    a derived seed.
    """
    L = sp.csr_matrix(L)
    n = L.shape[0]
    dinv = _inverse_diagonal(L)
    if start is None:
        X0 = make_rng(seed).uniform(-1.0, 1.0, size=(n, m))
    else:
        X0 = np.array(start, dtype=np.float64).reshape(n, -1)
        m = X0.shape[1]

    X = np.empty((n, m))
    matvecs = 0
    for k in range(m):
        x = jacobi_sweeps(L, X0[:, k], sweeps, omega, dinv)
        matvecs += sweeps
        attempt = 0
        while n > 0 and not np.any(x):
            attempt += 1
            if attempt > MAX_REGENERATIONS:
                raise GraphValidationError(f"test vector {k} smooths to zero for every start")
            logger.warning(f"Test vector {k} smoothed to zero; regenerating (attempt {attempt})")
            fresh = make_rng(seed + 7919 * attempt + k).uniform(-1.0, 1.0, size=n)
            x = jacobi_sweeps(L, fresh, sweeps, omega, dinv)
            matvecs += sweeps
        X[:, k] = x
    return TestVectors(X, matvecs)


test_vectors.__test__ = False  # not a pytest test despite the name


def affinity(L: sp.spmatrix, X: np.ndarray) -> sp.csr_matrix:
    """Squared cosine between the test-vector rows of adjacent vertices."""
    L = sp.csr_matrix(L)
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    norms = np.einsum("ij,ij->i", X, X)

    coo = L.tocoo()
    off = (coo.row != coo.col) & (coo.data != 0)
    rows, cols = coo.row[off], coo.col[off]
    if rows.size:
        touched = np.union1d(rows, cols)
        zero = touched[norms[touched] == 0]
        if zero.size:
            raise GraphValidationError(f"test vectors vanish at vertex {int(zero[0])}")
    dots = np.einsum("ij,ij->i", X[rows], X[cols])
    values = dots * dots / (norms[rows] * norms[cols])
    C = sp.csr_matrix((values, (rows, cols)), shape=L.shape)
    C.sort_indices()
    return C


def normalize_strength(C: sp.spmatrix, layout: BlockLayout | None = None) -> sp.csr_matrix:
    """
    Scale each entry by the larger of its row maximum and column maximum.

    Row and column maxima are (max, x) products with the all-ones vector.
    Entries that are zero are dropped.
    """
    C = sp.csr_matrix(C)
    C.eliminate_zeros()
    layout = layout or BlockLayout()
    row_max = spmv_semiring(layout.partition(C), np.ones(C.shape[1]), MAX_TIMES)
    col_max = spmv_semiring(layout.partition(transpose(C)), np.ones(C.shape[0]), MAX_TIMES)

    coo = C.tocoo()
    scale = np.maximum(row_max[coo.row], col_max[coo.col])
    S = sp.csr_matrix((coo.data / scale, (coo.row, coo.col)), shape=C.shape)
    S.eliminate_zeros()
    S.sort_indices()
    return S


def strength_of_connection(
    L: sp.spmatrix,
    m: int = DEFAULT_TEST_VECTORS,
    sweeps: int = DEFAULT_SWEEPS,
    seed: int = 0,
    layout: BlockLayout | None = None,
) -> tuple[sp.csr_matrix, int]:
    """S for ``L``, plus the number of matvecs spent smoothing test vectors."""
    tv = test_vectors(L, m=m, sweeps=sweeps, seed=seed)
    return normalize_strength(affinity(L, tv.X), layout), tv.matvecs
