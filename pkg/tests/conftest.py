"""Shared fixtures: small named graphs, their Laplacians and the forced grid shapes."""

import numpy as np
import pytest
import scipy.sparse as sp

from src import graphs
from src.laplacian import laplacian_from_graph

# Grid shapes every distribution-independence check runs over.
GRID_SHAPES = [(1, 1), (1, 4), (2, 2), (3, 2)]


def dense_laplacian(n: int, edges) -> np.ndarray:
    L = np.zeros((n, n))
    for u, v, *w in edges:
        weight = w[0] if w else 1.0
        L[u, u] += weight
        L[v, v] += weight
        L[u, v] -= weight
        L[v, u] -= weight
    return L


def zero_mean_solution(L: sp.spmatrix, b: np.ndarray) -> np.ndarray:
    """Minimum-norm solution of L x = b from the dense pseudo-inverse."""
    x = np.linalg.pinv(sp.csr_matrix(L).toarray()) @ b
    return x - x.mean()


@pytest.fixture
def p3():
    return laplacian_from_graph(graphs.path(3))


@pytest.fixture
def p4():
    return laplacian_from_graph(graphs.path(4))


@pytest.fixture
def star6():
    return laplacian_from_graph(graphs.star(6))


@pytest.fixture
def k3():
    return laplacian_from_graph(graphs.complete(3))


@pytest.fixture
def grid8():
    return laplacian_from_graph(graphs.grid2d(8, 8))


@pytest.fixture
def grid32():
    return laplacian_from_graph(graphs.grid2d(32, 32))


@pytest.fixture(scope="session")
def corpus():
    """Seeded small random graphs (n <= 60) with their Laplacians."""
    return [laplacian_from_graph(g) for g in graphs.random_corpus(50, n_max=60, seed=3)]


@pytest.fixture(scope="session")
def fixture_laplacians():
    """Twenty structurally varied fixtures for the invariant suites."""
    gs = [
        graphs.path(3), graphs.path(4), graphs.path(50), graphs.star(6), graphs.star(40),
        graphs.complete(3), graphs.complete(12), graphs.grid2d(8, 8), graphs.grid2d(5, 13),
        graphs.grid3d(4), graphs.preferential_attachment(150, 2, seed=1),
        graphs.preferential_attachment(200, 4, seed=2), graphs.small_world(120, 6, 0.1, seed=1),
        graphs.small_world(200, 8, 0.2, seed=2),
    ]
    gs.extend(graphs.random_corpus(6, n_max=80, seed=11))
    return [laplacian_from_graph(g) for g in gs]
