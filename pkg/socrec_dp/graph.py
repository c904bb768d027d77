#!/usr/bin/env python3
"""
Immutable social graph, SNAP edge-list ingestion and single-edge edits.

Node ids are dense integers 0..n-1; the original ids read from an edge list are
kept in ``Graph.node_ids`` and restored by every output routine.
"""

import bisect
import logging
import os
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import BinaryIO, Dict, Iterable, Iterator, List, Optional, Sequence, Set, TextIO, Tuple, Union

import networkx as nx
import numpy as np
import scipy.sparse as sp

from .errors import DomainError, GraphEditError, GraphFormatError

logger = logging.getLogger(__name__)

Edge = Tuple[int, int]
EdgeSource = Union[str, "os.PathLike[str]", BinaryIO]


class Direction(str, Enum):
    """Which neighbourhood of a node to read."""
    OUT = "out"
    IN = "in"
    UNDIRECTED = "undirected"


class EditKind(str, Enum):
    ADD = "add"
    REMOVE = "remove"


@dataclass(frozen=True)
class EdgeEdit:
    """Addition or removal of one edge; endpoints are ordered only for directed graphs."""
    kind: EditKind
    source: int
    target: int

    def __post_init__(self):
        if self.source == self.target:
            raise GraphEditError(f"edit endpoints must be distinct, got {self.source}")
        object.__setattr__(self, "kind", EditKind(self.kind))

    @classmethod
    def add(cls, source: int, target: int) -> "EdgeEdit":
        return cls(EditKind.ADD, source, target)

    @classmethod
    def remove(cls, source: int, target: int) -> "EdgeEdit":
        return cls(EditKind.REMOVE, source, target)

    @property
    def endpoints(self) -> Edge:
        return (self.source, self.target)

    def incident_to(self, v: int) -> bool:
        return v == self.source or v == self.target

    def inverse(self) -> "EdgeEdit":
        kind = EditKind.REMOVE if self.kind is EditKind.ADD else EditKind.ADD
        return EdgeEdit(kind, self.source, self.target)

    def __str__(self) -> str:
        sign = "+" if self.kind is EditKind.ADD else "-"
        return f"{sign}({self.source},{self.target})"


@dataclass(frozen=True)
class Graph:
    """
    Simple graph with sorted adjacency tuples.

    Undirected graphs store each edge in both endpoint lists and count it once
    in ``edge_count``. Instances never change after construction.
    """
    node_count: int
    directed: bool
    adjacency: Tuple[Tuple[int, ...], ...]
    edge_count: int
    node_ids: Optional[Tuple[int, ...]] = field(default=None)

    def __post_init__(self):
        if len(self.adjacency) != self.node_count:
            raise DomainError(
                f"adjacency has {len(self.adjacency)} rows for {self.node_count} nodes")
        if self.node_ids is not None and len(self.node_ids) != self.node_count:
            raise DomainError("node_ids must map every dense node id")

    @classmethod
    def from_edges(
        cls,
        node_count: int,
        edges: Iterable[Edge],
        directed: bool = False,
        node_ids: Optional[Sequence[int]] = None,
    ) -> "Graph":
        """Build a graph from logical edges; self-loops and duplicates are rejected."""
        rows: List[Set[int]] = [set() for _ in range(node_count)]
        edge_count = 0
        for a, b in edges:
            if not (0 <= a < node_count and 0 <= b < node_count):
                raise DomainError(f"edge ({a}, {b}) outside 0..{node_count - 1}")
            if a == b:
                raise DomainError(f"self-loop at node {a}")
            if b in rows[a]:
                raise DomainError(f"duplicate edge ({a}, {b})")
            rows[a].add(b)
            if not directed:
                rows[b].add(a)
            edge_count += 1
        adjacency = tuple(tuple(sorted(row)) for row in rows)
        ids = tuple(node_ids) if node_ids is not None else None
        return cls(node_count, directed, adjacency, edge_count, ids)

    @classmethod
    def from_networkx(cls, nx_graph: nx.Graph) -> "Graph":
        """Import a networkx graph, re-indexing its (sortable) node labels densely."""
        labels = sorted(nx_graph.nodes())
        index = {label: i for i, label in enumerate(labels)}
        edges = [(index[a], index[b]) for a, b in nx_graph.edges() if a != b]
        ids = labels if all(isinstance(label, int) for label in labels) else None
        return cls.from_edges(len(labels), edges, nx_graph.is_directed(), ids)

    def to_networkx(self) -> nx.Graph:
        nx_graph = nx.DiGraph() if self.directed else nx.Graph()
        nx_graph.add_nodes_from(range(self.node_count))
        nx_graph.add_edges_from(self.edges())
        return nx_graph

    @cached_property
    def _successor_sets(self) -> Tuple[frozenset, ...]:
        return tuple(frozenset(row) for row in self.adjacency)

    @cached_property
    def predecessors(self) -> Tuple[Tuple[int, ...], ...]:
        """In-neighbour lists (equal to ``adjacency`` for undirected graphs)."""
        if not self.directed:
            return self.adjacency
        rows: List[List[int]] = [[] for _ in range(self.node_count)]
        for a, row in enumerate(self.adjacency):
            for b in row:
                rows[b].append(a)
        return tuple(tuple(row) for row in rows)

    @cached_property
    def adjacency_matrix(self) -> sp.csr_matrix:
        """Sparse successor matrix A with A[a, b] = 1 for every stored arc a -> b."""
        indptr = np.zeros(self.node_count + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([len(row) for row in self.adjacency])
        indices = np.fromiter(
            (b for row in self.adjacency for b in row), dtype=np.int64, count=int(indptr[-1]))
        data = np.ones(len(indices), dtype=np.float64)
        return sp.csr_matrix((data, indices, indptr), shape=(self.node_count, self.node_count))

    @cached_property
    def max_degree(self) -> int:
        """d_max, the largest (out-)degree."""
        return max((len(row) for row in self.adjacency), default=0)

    def _check_node(self, v: int) -> None:
        if not 0 <= v < self.node_count:
            raise DomainError(f"node {v} outside 0..{self.node_count - 1}")

    def neighbors(self, v: int, direction: Optional[Direction] = None) -> Tuple[int, ...]:
        """Successors, predecessors or adjacency of ``v`` in ascending order."""
        self._check_node(v)
        if direction is None:
            direction = Direction.OUT if self.directed else Direction.UNDIRECTED
        direction = Direction(direction)
        if direction is Direction.UNDIRECTED:
            if self.directed:
                raise DomainError("undirected neighbourhood requested on a directed graph")
            return self.adjacency[v]
        if direction is Direction.OUT:
            return self.adjacency[v]
        return self.predecessors[v]

    def degree(self, v: int) -> int:
        """Degree of ``v``; out-degree for directed graphs."""
        self._check_node(v)
        return len(self.adjacency[v])

    def has_edge(self, a: int, b: int) -> bool:
        self._check_node(a)
        self._check_node(b)
        return b in self._successor_sets[a]

    def edges(self) -> Iterator[Edge]:
        """Logical edges in ascending order; undirected edges once, smaller end first."""
        for a, row in enumerate(self.adjacency):
            for b in row:
                if self.directed or a < b:
                    yield (a, b)

    def original_id(self, v: int) -> int:
        return self.node_ids[v] if self.node_ids is not None else v

    def dense_id(self, original: int) -> int:
        """Inverse of ``original_id``."""
        if self.node_ids is None:
            self._check_node(original)
            return original
        position = bisect.bisect_left(self.node_ids, original)
        if position == self.node_count or self.node_ids[position] != original:
            raise DomainError(f"node id {original} not in graph")
        return position

    def apply(self, edit: EdgeEdit) -> "Graph":
        """Return the neighbouring graph obtained by applying ``edit``."""
        a, b = edit.endpoints
        self._check_node(a)
        self._check_node(b)
        present = self.has_edge(a, b)
        if edit.kind is EditKind.ADD and present:
            raise GraphEditError(f"cannot add {edit}: edge exists")
        if edit.kind is EditKind.REMOVE and not present:
            raise GraphEditError(f"cannot remove {edit}: edge absent")

        rows = list(self.adjacency)
        rows[a] = _toggled(rows[a], b, edit.kind)
        if not self.directed:
            rows[b] = _toggled(rows[b], a, edit.kind)
        delta = 1 if edit.kind is EditKind.ADD else -1
        return Graph(self.node_count, self.directed, tuple(rows), self.edge_count + delta, self.node_ids)


def _toggled(row: Tuple[int, ...], v: int, kind: EditKind) -> Tuple[int, ...]:
    items = list(row)
    if kind is EditKind.ADD:
        bisect.insort(items, v)
    else:
        items.remove(v)
    return tuple(items)


def neighbors(g: Graph, v: int, direction: Optional[Direction] = None) -> Tuple[int, ...]:
    """Ordered neighbour set of ``v`` (see ``Graph.neighbors``)."""
    return g.neighbors(v, direction)


def apply_edit(g: Graph, edit: EdgeEdit) -> Graph:
    """New graph differing from ``g`` in exactly the edited edge."""
    return g.apply(edit)


@dataclass(frozen=True)
class EdgeListReport:
    """Result of parsing an edge list, with the ingestion counts."""
    graph: Graph
    lines_read: int
    duplicates_dropped: int
    self_loops_dropped: int


def parse_edge_list(source: EdgeSource, directed: bool = False) -> EdgeListReport:
    """
    Parse a SNAP-style edge list.

    Lines starting with '#' are comments, blank lines are ignored and every
    other line holds two whitespace-separated non-negative integer ids.
    Reciprocal arcs collapse into one edge when ``directed`` is False.
    """
    if hasattr(source, "read"):
        return _parse_lines(source, directed)  # type: ignore[arg-type]
    with open(source, "rb") as handle:
        return _parse_lines(handle, directed)


def _parse_lines(stream: BinaryIO, directed: bool) -> EdgeListReport:
    arcs: List[Edge] = []
    seen: Set[Edge] = set()
    ids: Set[int] = set()
    lines_read = duplicates = self_loops = 0

    for line_number, raw in enumerate(stream, start=1):
        try:
            line = raw.decode("utf-8") if isinstance(raw, bytes) else raw
        except UnicodeDecodeError as exc:
            raise GraphFormatError(f"not UTF-8 ({exc})", line_number) from exc
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) != 2:
            raise GraphFormatError(f"expected two node ids, got {len(tokens)} tokens", line_number)
        try:
            a, b = int(tokens[0]), int(tokens[1])
        except ValueError as exc:
            raise GraphFormatError(f"non-integer node id in {line!r}", line_number) from exc
        if a < 0 or b < 0:
            raise GraphFormatError(f"negative node id in {line!r}", line_number)

        lines_read += 1
        ids.update((a, b))
        if a == b:
            self_loops += 1
            continue
        key = (a, b) if directed else (min(a, b), max(a, b))
        if key in seen:
            duplicates += 1
            continue
        seen.add(key)
        arcs.append(key)

    if lines_read == 0:
        raise GraphFormatError("empty edge list")

    node_ids = sorted(ids)
    index: Dict[int, int] = {original: i for i, original in enumerate(node_ids)}
    graph = Graph.from_edges(
        len(node_ids), ((index[a], index[b]) for a, b in arcs), directed, node_ids)
    return EdgeListReport(graph, lines_read, duplicates, self_loops)


def load_edge_list(source: EdgeSource, directed: bool = False) -> Graph:
    """Load an edge list into a Graph, logging what ingestion dropped."""
    report = parse_edge_list(source, directed)
    logger.info(
        "loaded %d nodes, %d edges (%d duplicate lines, %d self-loops dropped)",
        report.graph.node_count, report.graph.edge_count,
        report.duplicates_dropped, report.self_loops_dropped)
    return report.graph


def write_edge_list(g: Graph, sink: TextIO, header: Iterable[str] = ()) -> None:
    """Write ``g`` in the edge-list format, using original node ids."""
    for line in header:
        sink.write(f"# {line}\n")
    sink.write(f"# Nodes: {g.node_count} Edges: {g.edge_count}\n")
    for a, b in g.edges():
        sink.write(f"{g.original_id(a)}\t{g.original_id(b)}\n")
