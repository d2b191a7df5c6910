"""Tests for graph ingestion, Laplacian construction, validation and connectivity."""

import numpy as np
import pytest
import scipy.sparse as sp

from src import graphs
from src.errors import GraphFormatError, GraphValidationError
from src.laplacian import (
    Graph,
    enforce_zero_row_sums,
    is_connected,
    laplacian_from_graph,
    laplacian_to_graph,
    largest_component,
    load_graph,
    validate_laplacian,
    write_edge_list,
)
from src.sparse_core import BlockLayout, random_permutation
from tests.conftest import GRID_SHAPES

P3_DENSE = np.array([[1.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 1.0]])


# ============================================================================
# Construction
# ============================================================================

class TestLaplacianFromGraph:
    """Tests for laplacian_from_graph."""

    def test_path3(self):
        L = laplacian_from_graph(Graph.from_edges(3, [(0, 1), (1, 2)]))
        assert np.array_equal(L.toarray(), P3_DENSE)

    def test_star6(self, star6):
        dense = star6.toarray()
        assert dense.diagonal().tolist() == [5, 1, 1, 1, 1, 1]
        assert dense[0, 1:].tolist() == [-1] * 5
        assert dense[1:, 1:].sum() == 5

    def test_single_weighted_edge(self):
        L = laplacian_from_graph(Graph.from_edges(2, [(0, 1, 2.0)]))
        assert np.array_equal(L.toarray(), [[2.0, -2.0], [-2.0, 2.0]])

    def test_parallel_edges_summed(self):
        L = laplacian_from_graph(Graph.from_edges(2, [(0, 1, 1.0), (1, 0, 2.5)]))
        assert L[0, 1] == -3.5

    def test_self_loop_rejected(self):
        with pytest.raises(GraphValidationError, match="self-loop"):
            laplacian_from_graph(Graph.from_edges(2, [(0, 0, 1.0), (0, 1, 1.0)]))

    @pytest.mark.parametrize("weight", [0.0, -1.0])
    def test_nonpositive_weight_rejected(self, weight):
        with pytest.raises(GraphValidationError, match="nonpositive"):
            laplacian_from_graph(Graph.from_edges(2, [(0, 1, weight)]))

    def test_out_of_range_rejected(self):
        with pytest.raises(GraphValidationError):
            laplacian_from_graph(Graph.from_edges(2, [(0, 2)]))

    def test_constant_in_nullspace(self, grid8):
        assert np.abs(grid8 @ np.ones(64)).max() <= 1e-12 * abs(grid8).max()

    def test_round_trip_through_graph(self, grid8):
        assert abs(laplacian_from_graph(laplacian_to_graph(grid8)) - grid8).max() == 0

    def test_enforce_zero_row_sums(self):
        M = sp.csr_matrix(np.array([[3.0, -1.0], [-1.0, 0.5]]))
        fixed = enforce_zero_row_sums(M).toarray()
        assert np.array_equal(fixed, [[1.0, -1.0], [-1.0, 1.0]])


# ============================================================================
# Validation
# ============================================================================

class TestValidateLaplacian:
    """Tests for validate_laplacian."""

    def test_p3_valid(self, p3):
        result = validate_laplacian(p3)
        assert result.is_valid
        assert result.errors == []
        assert "valid" in str(result)

    def test_row_sum_violation(self):
        result = validate_laplacian(sp.csr_matrix(np.array([[1.0, -1.0], [-1.0, 2.0]])))
        assert not result.is_valid
        assert any("row-sum violation on row 1" in e for e in result.errors)
        assert not any("row 0" in e for e in result.errors)

    def test_sign_violation(self):
        result = validate_laplacian(sp.csr_matrix(np.array([[1.0, 1.0], [1.0, 1.0]])))
        assert not result.is_valid
        assert any("sign violation" in e for e in result.errors)

    def test_asymmetry_reported(self):
        M = np.array([[1.0, -1.0, 0.0], [-0.5, 1.0, -0.5], [-0.5, 0.0, 0.5]])
        result = validate_laplacian(sp.csr_matrix(M))
        assert any("not symmetric" in e for e in result.errors)

    def test_nonsquare(self):
        result = validate_laplacian(sp.csr_matrix((2, 3)))
        assert not result.is_valid
        assert "not square" in result.errors[0]

    def test_violations_capped(self):
        n = 30
        M = sp.diags(np.ones(n), format="csr")
        result = validate_laplacian(M)
        assert len(result.errors) == 11
        assert result.errors[-1].startswith("... 20 more")

    def test_generated_graphs_valid(self, fixture_laplacians):
        for L in fixture_laplacians:
            assert validate_laplacian(L).is_valid


# ============================================================================
# Connectivity
# ============================================================================

class TestConnectivity:
    """Tests for is_connected and largest_component."""

    def test_path_connected(self, p3):
        assert is_connected(p3)

    def test_two_disjoint_edges(self):
        L = laplacian_from_graph(Graph.from_edges(4, [(0, 1), (2, 3)]))
        assert not is_connected(L)

    def test_single_vertex(self):
        assert is_connected(sp.csr_matrix((1, 1)))

    @pytest.mark.parametrize("rows,cols", GRID_SHAPES)
    def test_grid_layouts_agree(self, rows, cols):
        L = laplacian_from_graph(Graph.from_edges(6, [(0, 1), (1, 2), (3, 4), (4, 5)]))
        layout = BlockLayout(rows, cols, random_permutation(6, seed=1))
        assert not is_connected(L, layout)
        assert is_connected(laplacian_from_graph(graphs.path(6)), layout)

    def test_largest_component(self):
        g = Graph.from_edges(7, [(0, 1), (2, 3), (3, 4), (4, 5), (6, 2)])
        sub, kept = largest_component(g)
        assert kept.tolist() == [2, 3, 4, 5, 6]
        assert sub.n == 5
        assert is_connected(laplacian_from_graph(sub))

    def test_largest_component_matches_restricted_laplacian(self):
        g = Graph.from_edges(6, [(0, 1, 2.0), (0, 1, 1.0), (3, 4, 0.5), (4, 5, 1.5), (5, 3)],
                             dropped_self_loops=2)
        sub, kept = largest_component(g)
        L = laplacian_from_graph(g)
        assert kept.tolist() == [3, 4, 5]
        assert abs(laplacian_from_graph(sub) - L[kept][:, kept]).max() == 0
        assert sub.dropped_self_loops == 2

    def test_largest_component_of_connected_graph(self):
        g = graphs.path(5)
        sub, kept = largest_component(g)
        assert sub is g
        assert kept.tolist() == [0, 1, 2, 3, 4]


# ============================================================================
# File formats
# ============================================================================

class TestLoadGraph:
    """Tests for load_graph and write_edge_list."""

    def test_matrix_market_symmetric(self, tmp_path):
        path = tmp_path / "p3.mtx"
        path.write_text(
            "%%MatrixMarket matrix coordinate real symmetric\n3 3 2\n2 1 1.0\n3 2 1.0\n"
        )
        L = laplacian_from_graph(load_graph(path))
        assert np.array_equal(L.toarray(), P3_DENSE)

    def test_matrix_market_general_one_triangle(self, tmp_path):
        path = tmp_path / "p3.mtx"
        path.write_text("%%MatrixMarket matrix coordinate real general\n3 3 2\n1 2 1.0\n2 3 1.0\n")
        L = laplacian_from_graph(load_graph(path))
        assert np.array_equal(L.toarray(), P3_DENSE)

    def test_matrix_market_pattern(self, tmp_path):
        path = tmp_path / "p3.mtx"
        path.write_text("%%MatrixMarket matrix coordinate pattern symmetric\n3 3 2\n2 1\n3 2\n")
        L = laplacian_from_graph(load_graph(path))
        assert np.array_equal(L.toarray(), P3_DENSE)

    def test_matrix_market_nonsquare(self, tmp_path):
        path = tmp_path / "rect.mtx"
        path.write_text("%%MatrixMarket matrix coordinate real general\n2 3 1\n1 2 1.0\n")
        with pytest.raises(GraphFormatError, match="not square"):
            load_graph(path)

    def test_matrix_market_negative_weight(self, tmp_path):
        path = tmp_path / "neg.mtx"
        path.write_text("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 2 -1.0\n")
        with pytest.raises(GraphFormatError, match="negative"):
            load_graph(path)

    def test_matrix_market_self_loop_dropped(self, tmp_path):
        path = tmp_path / "loop.mtx"
        path.write_text(
            "%%MatrixMarket matrix coordinate real general\n3 3 3\n1 1 1.0\n1 2 1.0\n2 3 1.0\n"
        )
        g = load_graph(path)
        assert g.dropped_self_loops == 1
        assert np.array_equal(laplacian_from_graph(g).toarray(), P3_DENSE)

    def test_edge_list(self, tmp_path):
        path = tmp_path / "p3.txt"
        path.write_text("# a path\n0 1\n1 2  # trailing comment\n")
        g = load_graph(path)
        assert g.n == 3
        assert np.array_equal(laplacian_from_graph(g).toarray(), P3_DENSE)

    def test_edge_list_self_loop_dropped(self, tmp_path):
        path = tmp_path / "loop.txt"
        path.write_text("0 0 1.0\n0 1\n1 2\n")
        g = load_graph(path, "edge-list")
        assert g.dropped_self_loops == 1
        assert g.num_edges == 2

    def test_edge_list_parse_error_has_line(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("0 1\n1 two\n")
        with pytest.raises(GraphFormatError) as excinfo:
            load_graph(path)
        assert excinfo.value.line == 2
        assert str(excinfo.value).startswith("line 2:")

    def test_edge_list_negative_weight(self, tmp_path):
        path = tmp_path / "neg.txt"
        path.write_text("0 1 -2\n")
        with pytest.raises(GraphFormatError, match="negative weight"):
            load_graph(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_graph(tmp_path / "missing.txt")

    def test_unknown_format(self, tmp_path):
        with pytest.raises(ValueError):
            load_graph(tmp_path / "x.txt", "graphml")

    def test_write_then_load_round_trip(self, tmp_path):
        g = graphs.random_weighted(25, 0.2, seed=4)
        path = tmp_path / "g.txt"
        write_edge_list(g, path)
        back = load_graph(path)
        assert back.n == g.n
        assert back.edges() == g.edges()

    def test_round_trip_keeps_trailing_isolated_vertex(self, tmp_path):
        g = Graph.from_edges(4, [(0, 1, 1.0), (1, 2, 2.5)])
        path = tmp_path / "g.txt"
        write_edge_list(g, path)
        back = load_graph(path)
        assert back.n == 4
        assert back.edges() == g.edges()

    def test_vertex_count_header(self, tmp_path):
        path = tmp_path / "g.txt"
        path.write_text("# n: 6\n0 1\n1 2 0.5\n")
        assert load_graph(path).n == 6

    def test_vertex_count_header_too_small(self, tmp_path):
        path = tmp_path / "g.txt"
        path.write_text("# n: 2\n0 1\n1 2\n")
        with pytest.raises(GraphFormatError, match="declares 2"):
            load_graph(path)
