#!/usr/bin/env python3
"""
Exhaustive checks on small graphs.

Three kinds of check live here:

* ``audit_mechanism`` measures the largest log-probability ratio a mechanism
  shows across every single-edge edit of a graph and compares it with the
  claimed epsilon.
* ``brute_force_t`` / ``brute_force_t_all`` find the fewest non-incident edge
  edits that make a candidate the strict unique maximum, by breadth-first
  search over toggled edge sets.
* ``brute_force_sensitivity`` / ``sensitivity_violations`` measure the L1
  change in the utility vector over whole graph populations.
"""

import logging
from dataclasses import dataclass
from itertools import combinations, permutations
from typing import Dict, FrozenSet, Iterator, List, Optional, Tuple

import networkx as nx
import numpy as np

from .errors import (
    AuditInternalError,
    DomainError,
    InstanceTooLargeError,
    NoCandidatesError,
    ZeroUtilityError,
)
from .graph import EdgeEdit, Graph
from .mechanisms import (
    Mechanism,
    PrivacyParams,
    RecommendationDistribution,
    exponential_distribution,
    laplace_distribution,
    smoothed_best,
    smoothing_epsilon,
    smoothing_x as smoothing_weight,
)
from .utility import UtilityConfig, UtilityVector, compute_utility, sensitivity_bound

logger = logging.getLogger(__name__)

MAX_AUDIT_NODES = 32
MAX_LAPLACE_AUDIT_NODES = 10
MAX_ORACLE_NODES = 8
MAX_ORACLE_DEPTH = 5
MAX_ATLAS_NODES = 7
# relative slack for closed-form probabilities computed in floating point
FLOAT_SLACK = 1e-12

Edge = Tuple[int, int]


@dataclass(frozen=True)
class AuditReport:
    """Outcome of auditing one mechanism for one target."""
    target: int
    mechanism: Mechanism
    epsilon_claimed: float
    max_log_ratio: float
    witness: Optional[Tuple[EdgeEdit, int]]
    pairs_checked: int
    passed: bool
    interval_bound: Optional[float] = None

    def summary(self, target_label: Optional[int] = None) -> str:
        label = self.target if target_label is None else target_label
        status = "PASS" if self.passed else "FAIL"
        witness = "-" if self.witness is None else f"{self.witness[0]} @ {self.witness[1]}"
        return (f"{status} target={label} mechanism={self.mechanism.value} "
                f"claimed={self.epsilon_claimed:.6g} measured={self.max_log_ratio:.6g} "
                f"pairs={self.pairs_checked} witness={witness}")


def _node_pairs(g: Graph) -> Iterator[Edge]:
    if g.directed:
        return permutations(range(g.node_count), 2)
    return combinations(range(g.node_count), 2)


def enumerate_edits(g: Graph, r: int, relaxed: bool = True) -> List[EdgeEdit]:
    """
    Every single-edge edit of ``g``: a removal for each edge, an addition for each non-edge.

    With ``relaxed`` the edits touching ``r`` are left out.
    """
    g.neighbors(r)
    edits = []
    for a, b in _node_pairs(g):
        if relaxed and (a == r or b == r):
            continue
        edits.append(EdgeEdit.remove(a, b) if g.has_edge(a, b) else EdgeEdit.add(a, b))
    return edits


def max_log_ratio(
    first: RecommendationDistribution, second: RecommendationDistribution
) -> Tuple[float, int]:
    """Largest |ln p_i - ln p'_i| over the union of candidates, with the node attaining it."""
    p = first.entries
    q = second.entries
    worst, worst_node = 0.0, -1
    for node in sorted(set(p) | set(q)):
        a, b = p.get(node, 0.0), q.get(node, 0.0)
        if a == b:
            ratio = 0.0
        elif a == 0.0 or b == 0.0:
            ratio = float("inf")
        else:
            ratio = abs(float(np.log(a) - np.log(b)))
        if ratio > worst or worst_node < 0:
            worst, worst_node = ratio, node
    return worst, worst_node


def audit_params(cfg: UtilityConfig, g: Graph, r: int, epsilon: float, seed: int = 0) -> PrivacyParams:
    """Privacy parameters with delta_f taken from ``sensitivity_bound``."""
    return PrivacyParams(epsilon, sensitivity_bound(cfg, g, r).delta_f, seed)


def audit_mechanism(
    g: Graph,
    r: int,
    mechanism: Mechanism,
    cfg: UtilityConfig,
    p: PrivacyParams,
    tol: float = 1e-6,
    smoothing_x: Optional[float] = None,
    relaxed: bool = True,
) -> AuditReport:
    """
    Compare the recommendation distribution for ``r`` on ``g`` with the one on
    every neighbouring graph.

    ``p.delta_f`` is used as given, so an understated value shows up as a
    failure. Smoothing is applied to R_best with weight ``smoothing_x``
    (derived from ``p.epsilon`` when omitted) and is held to
    ln(1 + n x / (1 - x)). With ``relaxed=False`` edits incident to ``r`` are
    audited too; those are not covered by the privacy claim.
    """
    mechanism = Mechanism(mechanism)
    limit = MAX_LAPLACE_AUDIT_NODES if mechanism is Mechanism.LAPLACE else MAX_AUDIT_NODES
    if g.node_count > limit:
        raise InstanceTooLargeError(
            f"{g.node_count} nodes; {mechanism.value} audits are limited to {limit}")

    base_utility = compute_utility(g, r, cfg)
    n = len(base_utility)
    if n == 0:
        raise NoCandidatesError(f"target {r} has no candidates")

    interval_bound = None
    if mechanism is Mechanism.SMOOTHING:
        x = smoothing_weight(p.epsilon, n) if smoothing_x is None else smoothing_x
        claimed = smoothing_epsilon(x, n)
        interval_bound = claimed

        def distribution(u: UtilityVector) -> RecommendationDistribution:
            return smoothed_best(u, x)
    elif mechanism is Mechanism.EXPONENTIAL:
        claimed = p.epsilon

        def distribution(u: UtilityVector) -> RecommendationDistribution:
            return exponential_distribution(u, p)
    else:
        claimed = p.epsilon

        def distribution(u: UtilityVector) -> RecommendationDistribution:
            return laplace_distribution(u, p, tol)

    base = distribution(base_utility)
    if np.any(base.probabilities == 0):
        raise AuditInternalError(f"zero probability in the base distribution of target {r}")

    worst, witness, pairs = 0.0, None, 0
    for edit in enumerate_edits(g, r, relaxed):
        neighbour_utility = compute_utility(g.apply(edit), r, cfg)
        if len(neighbour_utility) == 0:
            ratio, node = float("inf"), -1
        else:
            neighbour = distribution(neighbour_utility)
            if relaxed and np.any(neighbour.probabilities == 0):
                raise AuditInternalError(f"zero probability after {edit} for target {r}")
            ratio, node = max_log_ratio(base, neighbour)
        pairs += max(n, len(neighbour_utility))
        if ratio > worst or witness is None:
            worst, witness = ratio, (edit, node)

    slack = claimed * FLOAT_SLACK + FLOAT_SLACK
    if mechanism is Mechanism.LAPLACE:
        slack += 3.0 * tol
    passed = worst <= claimed + slack
    report = AuditReport(r, mechanism, claimed, worst, witness, pairs, passed, interval_bound)
    if not passed:
        logger.warning("audit failed: %s", report.summary())
    else:
        logger.debug("%s", report.summary())
    return report


def _toggle_edit(g: Graph, pair: Edge) -> EdgeEdit:
    a, b = pair
    return EdgeEdit.remove(a, b) if g.has_edge(a, b) else EdgeEdit.add(a, b)


def _strict_leaders(u: UtilityVector) -> List[int]:
    """Candidates that are the unique maximum (zero or one of them)."""
    if u.ties_at_max != 1:
        return []
    return [int(u.candidates[int(np.argmax(u.values))])]


def brute_force_t_all(
    g: Graph,
    r: int,
    cfg: UtilityConfig,
    max_depth: int = MAX_ORACLE_DEPTH,
) -> Dict[int, Optional[int]]:
    """
    Fewest edits not incident to ``r`` that make each candidate the strict
    unique maximum; ``None`` when ``max_depth`` edits do not suffice.

    The candidate set stays fixed because no edit touches ``r``.
    """
    if g.node_count > MAX_ORACLE_NODES:
        raise InstanceTooLargeError(f"{g.node_count} nodes; the t oracle is limited to {MAX_ORACLE_NODES}")
    if not 0 <= max_depth <= MAX_ORACLE_DEPTH:
        raise InstanceTooLargeError(f"max_depth must lie in 0..{MAX_ORACLE_DEPTH}, got {max_depth}")

    start = compute_utility(g, r, cfg)
    if len(start) == 0:
        raise NoCandidatesError(f"target {r} has no candidates")
    if start.is_all_zero:
        raise ZeroUtilityError()

    universe = [edit.endpoints for edit in enumerate_edits(g, r, relaxed=True)]
    result: Dict[int, Optional[int]] = {int(x): None for x in start.candidates}
    unresolved = set(result)

    frontier: Dict[FrozenSet[Edge], Graph] = {frozenset(): g}
    seen = {frozenset()}
    for depth in range(max_depth + 1):
        for graph in frontier.values():
            for x in _strict_leaders(compute_utility(graph, r, cfg)):
                if x in unresolved:
                    result[x] = depth
                    unresolved.discard(x)
        if not unresolved or depth == max_depth:
            break
        following: Dict[FrozenSet[Edge], Graph] = {}
        for toggled, graph in frontier.items():
            for pair in universe:
                if pair in toggled:
                    continue
                state = toggled | {pair}
                if state in seen:
                    continue
                seen.add(state)
                following[state] = graph.apply(_toggle_edit(graph, pair))
        frontier = following
        logger.debug("t oracle target=%d depth=%d states=%d", r, depth + 1, len(frontier))
    return result


def brute_force_t(
    g: Graph, r: int, x: int, cfg: UtilityConfig, max_depth: int = MAX_ORACLE_DEPTH
) -> Optional[int]:
    """Fewest non-incident edits making ``x`` the strict unique maximum for ``r``."""
    if x == r or g.has_edge(r, x):
        raise DomainError(f"node {x} is not a candidate for target {r}")
    return brute_force_t_all(g, r, cfg, max_depth)[x]


@dataclass(frozen=True)
class SensitivityViolation:
    """A single edit whose utility change exceeds the claimed bound."""
    graph: Graph
    target: int
    edit: EdgeEdit
    observed: float
    bound: float


def _edit_changes(
    cfg: UtilityConfig, population: List[Graph]
) -> Iterator[Tuple[Graph, int, EdgeEdit, float]]:
    for g in population:
        for r in range(g.node_count):
            before = compute_utility(g, r, cfg)
            if len(before) == 0:
                continue
            for edit in enumerate_edits(g, r, relaxed=True):
                after = compute_utility(g.apply(edit), r, cfg)
                yield g, r, edit, float(np.abs(after.values - before.values).sum())


def brute_force_sensitivity(cfg: UtilityConfig, population: List[Graph]) -> float:
    """Largest observed L1 change of a utility vector under one non-incident edit."""
    return max((change for _, _, _, change in _edit_changes(cfg, population)), default=0.0)


def sensitivity_violations(cfg: UtilityConfig, population: List[Graph]) -> List[SensitivityViolation]:
    """Edits whose L1 utility change exceeds ``sensitivity_bound`` for the unedited graph."""
    violations = []
    for g, r, edit, change in _edit_changes(cfg, population):
        bound = sensitivity_bound(cfg, g, r).delta_f
        if change > bound * (1 + FLOAT_SLACK):
            violations.append(SensitivityViolation(g, r, edit, change, bound))
    if violations:
        logger.warning("%d sensitivity violations for %s", len(violations), cfg.label())
    return violations


def small_graph_population(max_nodes: int = 6, connected_only: bool = False) -> List[Graph]:
    """Every graph with 1..max_nodes nodes up to isomorphism, from the networkx graph atlas."""
    if not 1 <= max_nodes <= MAX_ATLAS_NODES:
        raise InstanceTooLargeError(f"the graph atlas covers 1..{MAX_ATLAS_NODES} nodes, got {max_nodes}")
    population = []
    for atlas_graph in nx.graph_atlas_g():
        nodes = atlas_graph.number_of_nodes()
        if nodes == 0 or nodes > max_nodes:
            continue
        if connected_only and not nx.is_connected(atlas_graph):
            continue
        population.append(Graph.from_networkx(atlas_graph))
    return population


def random_graph_population(
    count: int, nodes: int, edge_probability: float, seed: int = 0, directed: bool = False
) -> List[Graph]:
    """``count`` G(n, p) graphs drawn from one seeded stream."""
    if count < 0 or nodes < 1:
        raise DomainError("count must be >= 0 and nodes >= 1")
    if not 0 <= edge_probability <= 1:
        raise DomainError(f"edge_probability must lie in [0, 1], got {edge_probability}")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    graph_seeds = rng.integers(0, 2 ** 32, size=count)
    return [
        Graph.from_networkx(nx.gnp_random_graph(nodes, edge_probability, seed=int(s), directed=directed))
        for s in graph_seeds
    ]
