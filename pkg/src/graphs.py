"""
Seeded fixture graphs.

Thin wrappers over networkx generators that return :class:`Graph` objects
with contiguous 0-based vertex ids. Every random generator takes a seed and
is deterministic for a given seed.

Usage:
    from src.graphs import grid2d, preferential_attachment

    g = grid2d(64, 64)
    pa = preferential_attachment(20000, 4, seed=1)
"""

import networkx as nx
import numpy as np

from src.laplacian import Graph
from src.sparse_core import make_rng

DEFAULT_PA_EDGES = 4
DEFAULT_SW_NEIGHBORS = 8
DEFAULT_SW_REWIRE = 0.1


def from_networkx(G: nx.Graph) -> Graph:
    """Convert an undirected networkx graph; missing ``weight`` attributes count as 1."""
    G = nx.convert_node_labels_to_integers(G, ordering="sorted")
    edges = [(a, b, float(d.get("weight", 1.0))) for a, b, d in G.edges(data=True) if a != b]
    if not edges:
        return Graph(G.number_of_nodes(), np.zeros(0, np.int64), np.zeros(0, np.int64),
                     np.zeros(0, np.float64))
    return Graph.from_edges(G.number_of_nodes(), edges)


def path(n: int) -> Graph:
    return from_networkx(nx.path_graph(n))


def star(n: int) -> Graph:
    """Star on ``n`` vertices: center 0 joined to leaves 1..n-1."""
    return from_networkx(nx.star_graph(n - 1))


def complete(n: int) -> Graph:
    return from_networkx(nx.complete_graph(n))


def grid2d(nx_: int, ny: int) -> Graph:
    return from_networkx(nx.grid_2d_graph(nx_, ny))


def grid3d(k: int) -> Graph:
    """``k x k x k`` lattice with 6-point connectivity."""
    return from_networkx(nx.grid_graph(dim=[k, k, k]))


def preferential_attachment(n: int, m: int = DEFAULT_PA_EDGES, seed: int = 0) -> Graph:
    """Barabasi-Albert graph; average degree is about ``2 m``."""
    return from_networkx(nx.barabasi_albert_graph(n, m, seed=seed))


def small_world(
    n: int,
    k: int = DEFAULT_SW_NEIGHBORS,
    p: float = DEFAULT_SW_REWIRE,
    seed: int = 0,
) -> Graph:
    """Connected Watts-Strogatz graph."""
    return from_networkx(nx.connected_watts_strogatz_graph(n, k, p, seed=seed))


def random_weighted(n: int, p: float, seed: int = 0) -> Graph:
    """
    Connected Erdos-Renyi graph with uniform(0.5, 2) weights.

    A spanning path over a random vertex order is added so the result is
    always connected.
    """
    rng = make_rng(seed)
    G = nx.gnp_random_graph(n, p, seed=int(rng.integers(2**31)))
    order = rng.permutation(n)
    G.add_edges_from(zip(order[:-1].tolist(), order[1:].tolist()))
    for a, b in G.edges():
        G[a][b]["weight"] = float(rng.uniform(0.5, 2.0))
    return from_networkx(G)


def random_corpus(count: int, n_max: int = 60, seed: int = 0) -> list[Graph]:
    """
    Mixed corpus of small connected graphs for oracle comparisons.

    Sizes are drawn from ``4..n_max``; densities vary so both low-degree
    (eliminable) and dense vertices occur.
    """
    rng = make_rng(seed)
    corpus = []
    for k in range(count):
        n = int(rng.integers(4, n_max + 1))
        p = float(rng.choice([0.05, 0.1, 0.2, 0.4]))
        corpus.append(random_weighted(n, p, seed=seed * 1000 + k))
    return corpus


# Named fixtures shared by the test suites, the bench suites and the tool server.
FIXTURES = {
    "p3": lambda: path(3),
    "p4": lambda: path(4),
    "star6": lambda: star(6),
    "k3": lambda: complete(3),
}
