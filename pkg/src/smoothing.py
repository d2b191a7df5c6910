"""
Chebyshev smoothing and largest-eigenvalue estimation.

The smoother damps error components with eigenvalues inside ``[lo, hi]``
using the three-term Chebyshev recurrence. Passing ``dinv`` applies it to
the Jacobi-scaled operator D^-1 L instead of L; the matching bound comes
from ``estimate_lmax(L, dinv=dinv)``, which runs Lanczos on the symmetric
similar matrix D^-1/2 L D^-1/2.
"""

import logging

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from src.errors import SmootherIntervalError
from src.sparse_core import make_rng

logger = logging.getLogger(__name__)

DEFAULT_LANCZOS_STEPS = 10
DEFAULT_CHEBY_DEGREE = 2
# Chebyshev interval as fractions of the estimated largest eigenvalue.
CHEBY_LOWER_FRACTION = 0.3
CHEBY_UPPER_FRACTION = 1.1


def estimate_lmax(
    L: sp.spmatrix,
    iters: int = DEFAULT_LANCZOS_STEPS,
    seed: int = 0,
    dinv: np.ndarray | None = None,
) -> float:
    """
    Largest Ritz value after ``iters`` Lanczos steps with full reorthogonalization.

    The estimate never exceeds the true largest eigenvalue. Returns 0 for
    a zero matrix.
    """
    L = sp.csr_matrix(L)
    n = L.shape[0]
    if n == 0 or L.nnz == 0 or not np.any(L.data):
        logger.warning("Largest eigenvalue estimate is 0 (zero operator)")
        return 0.0

    if dinv is None:
        def op(v):
            return L @ v
    else:
        scale = np.sqrt(dinv)

        def op(v):
            return scale * (L @ (scale * v))

    steps = min(iters, n)
    Q = np.zeros((n, steps))
    alphas = np.zeros(steps)
    betas = np.zeros(steps)

    q = make_rng(seed).standard_normal(n)
    q /= np.linalg.norm(q)
    k = 0
    for k in range(steps):
        Q[:, k] = q
        u = op(q)
        alphas[k] = q @ u
        r = u - alphas[k] * q
        if k > 0:
            r -= betas[k - 1] * Q[:, k - 1]
        r -= Q[:, : k + 1] @ (Q[:, : k + 1].T @ r)
        beta = np.linalg.norm(r)
        if beta <= 1e-12 * max(abs(alphas[k]), 1.0):
            break
        betas[k] = beta
        q = r / beta
    m = k + 1

    ritz = scipy.linalg.eigvalsh_tridiagonal(alphas[:m], betas[: m - 1])
    lmax = float(ritz[-1])
    if lmax <= 0:
        logger.warning("Largest eigenvalue estimate is 0 (zero operator)")
        return 0.0
    return lmax


def chebyshev_bounds(lmax: float) -> tuple[float, float]:
    return CHEBY_LOWER_FRACTION * lmax, CHEBY_UPPER_FRACTION * lmax


def chebyshev_smooth(
    L: sp.spmatrix,
    b: np.ndarray,
    x: np.ndarray,
    degree: int,
    lo: float,
    hi: float,
    dinv: np.ndarray | None = None,
) -> np.ndarray:
    """
    Apply a degree-``degree`` Chebyshev polynomial to the residual equation.

    Performs exactly ``degree`` products with L. Degree 1 is the Richardson
    step ``x + 2/(lo + hi) (b - L x)``.
    """
    if not 0 < lo < hi:
        raise SmootherIntervalError(f"Chebyshev interval needs 0 < lo < hi, got [{lo}, {hi}]")
    if degree < 1:
        raise ValueError(f"Chebyshev degree must be >= 1, got {degree}")

    theta = 0.5 * (hi + lo)
    delta = 0.5 * (hi - lo)
    sigma = theta / delta
    rho = 1.0 / sigma

    def precondition(r):
        return r if dinv is None else dinv * r

    x = np.array(x, dtype=np.float64, copy=True)
    d = precondition(b - L @ x) / theta
    x += d
    for _ in range(1, degree):
        rho_next = 1.0 / (2.0 * sigma - rho)
        d = rho_next * rho * d + (2.0 * rho_next / delta) * precondition(b - L @ x)
        x += d
        rho = rho_next
    return x
