"""
Tests for the graph model, edits and edge-list I/O.
"""

import io

import networkx as nx
import pytest

from socrec_dp.errors import DomainError, GraphEditError, GraphFormatError
from socrec_dp.graph import (
    Direction,
    EdgeEdit,
    Graph,
    apply_edit,
    load_edge_list,
    neighbors,
    parse_edge_list,
    write_edge_list,
)


class TestGraphModel:
    """Test construction and neighbourhood queries."""

    def test_undirected_neighbors(self, g2):
        """Neighbours are read off both endpoints of each edge."""
        assert neighbors(g2, 3, Direction.UNDIRECTED) == (1, 2)
        assert g2.neighbors(0) == (1, 2)
        assert g2.edge_count == 5

    def test_directed_neighbors(self):
        """Out- and in-neighbourhoods differ on a directed graph."""
        g = Graph.from_edges(3, [(0, 1), (1, 2)], directed=True)
        assert g.neighbors(1) == (2,)
        assert g.neighbors(1, Direction.IN) == (0,)
        assert g.degree(1) == 1
        with pytest.raises(DomainError):
            g.neighbors(1, Direction.UNDIRECTED)

    def test_rejects_self_loops_and_duplicates(self):
        """from_edges refuses anything that is not a simple graph."""
        with pytest.raises(DomainError):
            Graph.from_edges(3, [(1, 1)])
        with pytest.raises(DomainError):
            Graph.from_edges(3, [(0, 1), (1, 0)])

    def test_unknown_node(self, g1):
        """Out-of-range node ids are domain errors."""
        with pytest.raises(DomainError):
            g1.neighbors(7)

    def test_max_degree_and_matrix(self, g2):
        """The adjacency matrix stores each undirected edge twice."""
        assert g2.max_degree == 3
        assert g2.adjacency_matrix.sum() == 10

    def test_networkx_conversion(self):
        """Graphs convert to and from networkx without losing edges."""
        g = Graph.from_networkx(nx.path_graph(4))
        assert g.edge_count == 3
        assert sorted(g.to_networkx().edges()) == [(0, 1), (1, 2), (2, 3)]


class TestEdits:
    """Test single-edge edits."""

    def test_add_edge(self, g2):
        """Adding 3-4 yields a new graph and leaves the original alone."""
        edited = apply_edit(g2, EdgeEdit.add(3, 4))
        assert edited.edge_count == 6
        assert edited.neighbors(4) == (1, 3)
        assert g2.neighbors(4) == (1,)

    def test_remove_edge(self, g2):
        """Removing an edge drops it from both endpoints."""
        edited = g2.apply(EdgeEdit.remove(1, 3))
        assert edited.edge_count == 4
        assert not edited.has_edge(3, 1)

    def test_inapplicable_edits(self, g2):
        """Adding an existing edge or removing a missing one is an edit error."""
        with pytest.raises(GraphEditError):
            g2.apply(EdgeEdit.add(0, 1))
        with pytest.raises(GraphEditError):
            g2.apply(EdgeEdit.remove(0, 4))

    def test_self_loop_edit(self):
        """An edit needs two distinct endpoints."""
        with pytest.raises(GraphEditError):
            EdgeEdit.add(2, 2)

    def test_inverse_restores_graph(self, g2):
        """Applying an edit and its inverse gives the original adjacency."""
        edit = EdgeEdit.add(3, 4)
        assert g2.apply(edit).apply(edit.inverse()).adjacency == g2.adjacency
        assert str(edit) == "+(3,4)"


class TestEdgeList:
    """Test SNAP edge-list parsing and writing."""

    def test_parse_with_comments_duplicates_and_loops(self):
        """Comments and blanks are skipped; duplicates and self-loops are counted."""
        data = b"# Directed graph\n\n1 2\n2\t3\n2 1\n5 5\n"
        report = parse_edge_list(io.BytesIO(data))
        assert report.lines_read == 4
        assert report.duplicates_dropped == 1
        assert report.self_loops_dropped == 1
        assert report.graph.node_ids == (1, 2, 3, 5)
        assert report.graph.edge_count == 2
        assert report.graph.degree(report.graph.dense_id(5)) == 0

    def test_directed_keeps_reciprocal_arcs(self):
        """Reciprocal arcs are distinct edges in directed mode."""
        report = parse_edge_list(io.BytesIO(b"1 2\n2 1\n"), directed=True)
        assert report.graph.edge_count == 2
        assert report.duplicates_dropped == 0

    def test_bad_token_count(self):
        """A line with three ids reports its line number."""
        with pytest.raises(GraphFormatError) as exc_info:
            parse_edge_list(io.BytesIO(b"# header\n1 2\n1 2 3\n"))
        assert exc_info.value.line_number == 3
        assert "line 3" in str(exc_info.value)

    def test_non_integer_id(self):
        """Non-numeric ids are format errors."""
        with pytest.raises(GraphFormatError):
            parse_edge_list(io.BytesIO(b"a b\n"))

    def test_empty_input(self):
        """A file with only comments has no graph in it."""
        with pytest.raises(GraphFormatError):
            parse_edge_list(io.BytesIO(b"# nothing here\n"))

    def test_write_then_load(self, tmp_path):
        """Written files keep original ids and load back to the same edges."""
        g = parse_edge_list(io.BytesIO(b"10 20\n20 30\n")).graph
        path = tmp_path / "g.txt"
        with open(path, "w") as sink:
            write_edge_list(g, sink, header=["test graph"])
        text = path.read_text()
        assert text.startswith("# test graph\n# Nodes: 3 Edges: 2\n")
        assert "10\t20" in text
        loaded = load_edge_list(str(path))
        assert loaded.node_ids == (10, 20, 30)
        assert list(loaded.edges()) == list(g.edges())
