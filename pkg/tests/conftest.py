"""
Shared example graphs.
"""

import pytest

from socrec_dp import Graph


@pytest.fixture
def g1():
    """0-1, 1-2, 1-3: node 0 shares neighbour 1 with both candidates."""
    return Graph.from_edges(4, [(0, 1), (1, 2), (1, 3)])


@pytest.fixture
def g2():
    return Graph.from_edges(5, [(0, 1), (0, 2), (1, 3), (2, 3), (1, 4)])


@pytest.fixture
def path4():
    return Graph.from_edges(4, [(0, 1), (1, 2), (2, 3)])


@pytest.fixture
def k4():
    return Graph.from_edges(4, [(a, b) for a in range(4) for b in range(a + 1, 4)])


@pytest.fixture
def three_way_tie():
    """Three candidates tied at u_max = d_r = 1, plus node 5 with utility 0."""
    return Graph.from_edges(6, [(0, 1), (1, 2), (1, 3), (1, 4), (4, 5)])
