#!/usr/bin/env python3
"""
Candidate sets, link-analysis utilities and their sensitivity.

Two utility functions are supported: the number of common neighbours and the
truncated weighted-paths (Katz-style) score. Walks always follow out-edges from
the target, so the same code serves directed and undirected graphs.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional, Tuple

import numpy as np

from .errors import DomainError, UnsupportedConfigurationError
from .graph import Graph

logger = logging.getLogger(__name__)

# Longest walk length the conservative sensitivity bound is derived for.
MAX_CERTIFIED_PATH_LEN = 3
DEFAULT_GAMMA = 0.005


class UtilityKind(str, Enum):
    COMMON_NEIGHBORS = "common_neighbors"
    WEIGHTED_PATHS = "weighted_paths"

    @classmethod
    def parse(cls, text: str) -> "UtilityKind":
        """Accept both ``common_neighbors`` and the CLI spelling ``common-neighbors``."""
        return cls(text.strip().lower().replace("-", "_"))


@dataclass(frozen=True)
class UtilityConfig:
    """
    Which utility to compute; ``gamma`` only applies to weighted paths.

    ``degree_cap`` is a public bound on the maximum degree. When set, the
    weighted-paths sensitivity uses it instead of the graph's own d_max, so
    every neighbouring graph gets the same noise scale.
    """
    kind: UtilityKind = UtilityKind.COMMON_NEIGHBORS
    gamma: Optional[float] = None
    max_path_len: int = 3
    degree_cap: Optional[int] = None

    def __post_init__(self):
        kind = UtilityKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is UtilityKind.COMMON_NEIGHBORS:
            if self.gamma is not None:
                raise DomainError("gamma is meaningless for common_neighbors")
        else:
            if self.gamma is None:
                object.__setattr__(self, "gamma", DEFAULT_GAMMA)
            if self.gamma < 0:
                raise DomainError(f"gamma must be >= 0, got {self.gamma}")
        if self.max_path_len < 2:
            raise DomainError(f"max_path_len must be >= 2, got {self.max_path_len}")
        if self.degree_cap is not None and self.degree_cap < 1:
            raise DomainError(f"degree_cap must be >= 1, got {self.degree_cap}")

    @classmethod
    def common_neighbors(cls) -> "UtilityConfig":
        return cls(UtilityKind.COMMON_NEIGHBORS)

    @classmethod
    def weighted_paths(
        cls, gamma: float = DEFAULT_GAMMA, max_path_len: int = 3, degree_cap: Optional[int] = None
    ) -> "UtilityConfig":
        return cls(UtilityKind.WEIGHTED_PATHS, gamma, max_path_len, degree_cap)

    def label(self) -> str:
        if self.kind is UtilityKind.COMMON_NEIGHBORS:
            return "common-neighbors"
        return f"weighted-paths(gamma={self.gamma:g},L={self.max_path_len})"


@dataclass(frozen=True, eq=False)
class UtilityVector:
    """
    Utilities of recommending each candidate to ``target``.

    ``candidates`` holds dense node ids in ascending order and ``values`` the
    matching non-negative utilities.
    """
    target: int
    candidates: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        candidates = np.asarray(self.candidates, dtype=np.int64)
        values = np.asarray(self.values, dtype=np.float64)
        if candidates.shape != values.shape or candidates.ndim != 1:
            raise DomainError("candidates and values must be 1-d arrays of equal length")
        if values.size and values.min() < 0:
            raise DomainError("utilities must be non-negative")
        if candidates.size > 1 and np.any(np.diff(candidates) <= 0):
            raise DomainError("candidates must be strictly ascending")
        object.__setattr__(self, "candidates", candidates)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_mapping(cls, target: int, entries: Dict[int, float]) -> "UtilityVector":
        keys = sorted(entries)
        return cls(target, np.array(keys, dtype=np.int64), np.array([entries[k] for k in keys], dtype=np.float64))

    def __len__(self) -> int:
        return int(self.candidates.size)

    @property
    def u_max(self) -> float:
        return float(self.values.max()) if self.values.size else 0.0

    @property
    def entries(self) -> Dict[int, float]:
        return {int(i): float(u) for i, u in zip(self.candidates, self.values)}

    @property
    def is_all_zero(self) -> bool:
        """Nothing worth recommending: no candidates, or every utility is 0."""
        return self.u_max <= 0.0

    @property
    def ties_at_max(self) -> int:
        if not self.values.size:
            return 0
        return int(np.count_nonzero(self.values == self.values.max()))

    def value_of(self, node: int) -> float:
        position = int(np.searchsorted(self.candidates, node))
        if position == self.candidates.size or self.candidates[position] != node:
            raise DomainError(f"node {node} is not a candidate for target {self.target}")
        return float(self.values[position])

    def relabeled(self, target: int, mapping: Dict[int, int]) -> "UtilityVector":
        """Same utilities under a node relabelling (used for exchangeability checks)."""
        return UtilityVector.from_mapping(target, {mapping[i]: u for i, u in self.entries.items()})


class SensitivityBasis(str, Enum):
    EXACT = "exact"
    CONSERVATIVE = "conservative"


@dataclass(frozen=True)
class SensitivityBound:
    """L1 sensitivity of a utility vector under one non-incident edge flip."""
    delta_f: float
    basis: SensitivityBasis

    def __post_init__(self):
        if not self.delta_f > 0:
            raise DomainError(f"delta_f must be positive, got {self.delta_f}")


def _candidate_array(g: Graph, r: int) -> np.ndarray:
    mask = np.ones(g.node_count, dtype=bool)
    mask[r] = False
    mask[list(g.neighbors(r))] = False
    return np.flatnonzero(mask)


def candidate_set(g: Graph, r: int) -> Tuple[int, ...]:
    """Nodes that may be recommended to ``r``: everyone except r and its (out-)neighbours."""
    g.neighbors(r)  # range check
    return tuple(int(v) for v in _candidate_array(g, r))


def _two_hop_counts(g: Graph, r: int) -> np.ndarray:
    counts = np.zeros(g.node_count, dtype=np.float64)
    for x in g.neighbors(r):
        row = g.adjacency[x]
        if row:
            counts[list(row)] += 1.0
    return counts


def common_neighbors_utility(g: Graph, r: int) -> UtilityVector:
    """
    u_i = number of common neighbours of i and r.

    Computed by a 2-hop traversal from r; for directed graphs this counts the
    intermediaries x with r -> x -> i.
    """
    candidates = _candidate_array(g, r)
    counts = _two_hop_counts(g, r)
    return UtilityVector(r, candidates, counts[candidates])


def walk_counts(g: Graph, r: int, max_len: int) -> Dict[int, np.ndarray]:
    """Number of length-l walks from r to every node, for l = 1..max_len."""
    g.neighbors(r)
    transposed = g.adjacency_matrix.T.tocsr()
    current = np.zeros(g.node_count, dtype=np.float64)
    current[list(g.adjacency[r])] = 1.0
    walks = {1: current}
    for length in range(2, max_len + 1):
        current = transposed @ current
        walks[length] = current
    return walks


def weighted_paths_utility(g: Graph, r: int, cfg: UtilityConfig) -> UtilityVector:
    """u_i = sum over l = 2..L of gamma^(l-2) times the number of length-l walks r -> i."""
    if cfg.kind is not UtilityKind.WEIGHTED_PATHS:
        raise DomainError("weighted_paths_utility needs a weighted_paths config")
    candidates = _candidate_array(g, r)
    walks = walk_counts(g, r, cfg.max_path_len)
    score = np.zeros(g.node_count, dtype=np.float64)
    for length in range(2, cfg.max_path_len + 1):
        weight = cfg.gamma ** (length - 2)  # 0.0 ** 0 == 1.0
        if weight:
            score += weight * walks[length]
    return UtilityVector(r, candidates, score[candidates])


def compute_utility(g: Graph, r: int, cfg: UtilityConfig) -> UtilityVector:
    if cfg.kind is UtilityKind.COMMON_NEIGHBORS:
        return common_neighbors_utility(g, r)
    return weighted_paths_utility(g, r, cfg)


def sensitivity_bound(cfg: UtilityConfig, g: Graph, r: int) -> SensitivityBound:
    """
    Delta f for target ``r`` under edge flips not incident to ``r``.

    Common neighbours move by at most one unit in one candidate. Weighted paths
    (L <= 3) use 1 + 2*gamma*(d_max + d_r), which dominates the new length-3
    walks an edge can open through either endpoint. d_max comes from
    ``cfg.degree_cap`` when set; otherwise from ``g``, and then an edit that
    raises the maximum degree moves the bound by 2*gamma.
    """
    if cfg.kind is UtilityKind.COMMON_NEIGHBORS or cfg.max_path_len == 2:
        return SensitivityBound(1.0, SensitivityBasis.EXACT)
    if cfg.max_path_len > MAX_CERTIFIED_PATH_LEN:
        raise UnsupportedConfigurationError(
            f"no sensitivity bound derived for walks longer than {MAX_CERTIFIED_PATH_LEN}")
    if cfg.gamma == 0:
        return SensitivityBound(1.0, SensitivityBasis.EXACT)
    d_max = g.max_degree
    if cfg.degree_cap is not None:
        if d_max > cfg.degree_cap:
            raise DomainError(f"max degree {d_max} exceeds degree_cap={cfg.degree_cap}")
        d_max = cfg.degree_cap
    delta_f = 1.0 + 2.0 * cfg.gamma * (d_max + g.degree(r))
    return SensitivityBound(delta_f, SensitivityBasis.CONSERVATIVE)


def concentration_beta(u: UtilityVector, fraction: float) -> int:
    """Smallest beta whose top-beta utilities hold at least ``fraction`` of the total."""
    if not 0 < fraction <= 1:
        raise DomainError(f"fraction must lie in (0, 1], got {fraction}")
    total = float(u.values.sum())
    if total <= 0:
        return 0
    cumulative = np.cumsum(np.sort(u.values)[::-1])
    # tiny relative slack so fraction=1 is reached despite summation order
    return int(np.searchsorted(cumulative, fraction * total * (1 - 1e-12))) + 1
