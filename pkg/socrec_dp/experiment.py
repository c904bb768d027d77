#!/usr/bin/env python3
"""
Experiment pipeline: sample targets, compute mechanism accuracies and the
theoretical bound for each, and write records, CDF and degree tables as CSV.
"""

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import groupby
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, TextIO, Tuple

import networkx as nx
import numpy as np
from dotenv import dotenv_values

from .bounds import t_formula, tightest_accuracy_bound
from .errors import ConfigError, DomainError, SocRecError
from .graph import Graph, load_edge_list
from .mechanisms import (
    Mechanism,
    PrivacyParams,
    expected_accuracy,
    exponential_distribution,
    monte_carlo_accuracy,
    smoothed_best,
    smoothing_x,
)
from .utility import UtilityConfig, UtilityKind, compute_utility, sensitivity_bound

logger = logging.getLogger(__name__)

RECORD_HEADER = [
    "target", "degree", "u_max", "t", "epsilon",
    "exp_acc", "laplace_acc", "bound_acc", "skipped", "reason",
]
SERIES = ("exponential", "laplace", "smoothing", "bound")
WEIGHTED_PATHS_GAMMAS = (0.05, 0.005, 0.0005)
SETTING_KEYS = frozenset({
    "graph", "directed", "utility", "gamma", "max_path_len", "degree_cap", "epsilon",
    "sample_frac", "trials", "seed", "mechanisms", "smoothing_x", "out", "workers",
})


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment run; see ``from_settings`` for the flat key=value form."""
    graph_path: str = ""
    directed: bool = False
    utility: UtilityConfig = field(default_factory=UtilityConfig.common_neighbors)
    epsilons: Tuple[float, ...] = (0.5, 1.0)
    sample_fraction: float = 0.1
    trials: int = 1000
    seed: int = 0
    mechanisms: Tuple[Mechanism, ...] = (Mechanism.EXPONENTIAL, Mechanism.LAPLACE)
    smoothing_x: Optional[float] = None
    output_path: Optional[str] = None
    workers: int = 1

    def __post_init__(self):
        if not self.epsilons:
            raise ConfigError("at least one epsilon is required")
        if any(not eps > 0 for eps in self.epsilons):
            raise ConfigError(f"epsilons must be positive, got {list(self.epsilons)}")
        if not self.mechanisms:
            raise ConfigError("at least one mechanism is required")
        object.__setattr__(self, "mechanisms", tuple(Mechanism(m) for m in self.mechanisms))
        object.__setattr__(self, "epsilons", tuple(float(e) for e in self.epsilons))
        if not 0 < self.sample_fraction <= 1:
            raise ConfigError(f"sample_fraction must lie in (0, 1], got {self.sample_fraction}")
        if self.trials < 1:
            raise ConfigError(f"trials must be positive, got {self.trials}")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")
        if self.smoothing_x is not None and not 0 <= self.smoothing_x < 1:
            raise ConfigError(f"smoothing_x must lie in [0, 1), got {self.smoothing_x}")
        if self.workers < 1:
            raise ConfigError(f"workers must be positive, got {self.workers}")

    @classmethod
    def from_settings(cls, settings: Mapping[str, Any]) -> "ExperimentConfig":
        """
        Build a config from flat settings (a parsed key=value file merged with flags).

        Values may be strings as read from a file or already-typed values.
        Missing or None entries keep their defaults; weighted paths without a
        gamma use 0.005. Unknown keys raise ``ConfigError``.
        """
        unknown = sorted(set(settings) - SETTING_KEYS)
        if unknown:
            raise ConfigError(f"unknown experiment setting(s): {', '.join(unknown)}")
        values = {key: value for key, value in settings.items() if value is not None and value != ""}
        try:
            kind = UtilityKind.parse(str(values.get("utility", UtilityKind.COMMON_NEIGHBORS.value)))
            if kind is UtilityKind.COMMON_NEIGHBORS:
                if "gamma" in values:
                    raise ConfigError("gamma only applies to weighted-paths")
                utility = UtilityConfig(kind, max_path_len=int(values.get("max_path_len", 3)))
            else:
                cap = values.get("degree_cap")
                utility = UtilityConfig(
                    kind,
                    float(values.get("gamma", WEIGHTED_PATHS_GAMMAS[1])),
                    int(values.get("max_path_len", 3)),
                    None if cap is None else int(cap),
                )
            kwargs: Dict[str, Any] = {"utility": utility}
            if "graph" in values:
                kwargs["graph_path"] = str(values["graph"])
            if "directed" in values:
                kwargs["directed"] = _as_bool(values["directed"])
            if "epsilon" in values:
                kwargs["epsilons"] = tuple(float(e) for e in _as_list(values["epsilon"]))
            if "sample_frac" in values:
                kwargs["sample_fraction"] = float(values["sample_frac"])
            if "trials" in values:
                kwargs["trials"] = int(values["trials"])
            if "seed" in values:
                kwargs["seed"] = int(values["seed"])
            if "mechanisms" in values:
                kwargs["mechanisms"] = tuple(Mechanism(m) for m in _as_list(values["mechanisms"]))
            if "smoothing_x" in values:
                kwargs["smoothing_x"] = float(values["smoothing_x"])
            if "out" in values:
                kwargs["output_path"] = str(values["out"])
            if "workers" in values:
                kwargs["workers"] = int(values["workers"])
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid experiment setting: {exc}") from exc
        return cls(**kwargs)


def _as_bool(value: Any) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {value!r}")


def _as_list(value: Any) -> List[str]:
    if isinstance(value, (int, float)):
        return [str(value)]
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return [str(item) for item in value]


def load_config_file(path: str) -> Dict[str, Optional[str]]:
    """Read a flat key=value experiment file; keys are lower-cased, '-' becomes '_'."""
    if not Path(path).is_file():
        raise ConfigError(f"config file not found: {path}")
    raw = dotenv_values(path)
    return {key.strip().lower().replace("-", "_"): value for key, value in raw.items()}


def gamma_output_path(output_path: str, gamma: float) -> str:
    """Records path of one sweep run: ``<stem>.gamma<gamma><suffix>`` beside ``output_path``."""
    out = Path(output_path)
    return str(out.with_name(f"{out.stem}.gamma{gamma:g}{out.suffix}"))


def sweep_from_settings(settings: Mapping[str, Any]) -> List[ExperimentConfig]:
    """
    Expand flat settings into one config per weighted-paths gamma.

    Weighted paths without a gamma sweep ``WEIGHTED_PATHS_GAMMAS``; a list of
    gammas (comma string or sequence) sweeps those. When more than one run
    results, each writes to ``gamma_output_path(out, gamma)``. Common
    neighbours and single gammas give exactly one config.
    """
    values = dict(settings)
    try:
        kind = UtilityKind.parse(str(values.get("utility") or UtilityKind.COMMON_NEIGHBORS.value))
        raw = values.get("gamma")
        gammas = [float(g) for g in _as_list(raw)] if raw not in (None, "") else list(WEIGHTED_PATHS_GAMMAS)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid experiment setting: {exc}") from exc
    if kind is UtilityKind.COMMON_NEIGHBORS or len(gammas) == 1:
        if kind is UtilityKind.WEIGHTED_PATHS:
            values["gamma"] = gammas[0]
        return [ExperimentConfig.from_settings(values)]
    if len(set(gammas)) != len(gammas):
        raise ConfigError(f"repeated gamma in sweep: {gammas}")

    configs = []
    for gamma in gammas:
        run = dict(values, gamma=gamma)
        if values.get("out"):
            run["out"] = gamma_output_path(str(values["out"]), gamma)
        configs.append(ExperimentConfig.from_settings(run))
    logger.info("gamma sweep over %s", [f"{g:g}" for g in gammas])
    return configs


@dataclass(frozen=True)
class EpsilonAccuracy:
    """Accuracies for one target at one epsilon; None where a mechanism was not run."""
    bound_accuracy: float
    exp_accuracy: Optional[float] = None
    laplace_accuracy: Optional[float] = None
    smoothing_accuracy: Optional[float] = None

    def series(self, name: str) -> Optional[float]:
        return {
            "exponential": self.exp_accuracy,
            "laplace": self.laplace_accuracy,
            "smoothing": self.smoothing_accuracy,
            "bound": self.bound_accuracy,
        }[name]


@dataclass(frozen=True)
class AccuracyRecord:
    """Per-target results; ``target`` is the original node id."""
    target: int
    degree: int
    u_max: float = 0.0
    t: Optional[int] = None
    accuracies: Dict[float, EpsilonAccuracy] = field(default_factory=dict)
    skipped: bool = False
    reason: str = ""


def sample_targets(g: Graph, fraction: float, seed: int) -> List[int]:
    """ceil(fraction * n) distinct dense node ids, uniform without replacement, ascending."""
    if not 0 < fraction <= 1:
        raise DomainError(f"fraction must lie in (0, 1], got {fraction}")
    n = g.node_count
    # tolerance so products like 0.3 * 10 do not round up past the intended count
    count = min(n, math.ceil(fraction * n - 1e-9))
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    chosen = rng.choice(n, size=count, replace=False)
    return sorted(int(v) for v in chosen)


def evaluate_target(g: Graph, r: int, cfg: ExperimentConfig) -> AccuracyRecord:
    """Accuracies of every configured mechanism and the bound, for each epsilon."""
    target = g.original_id(r)
    degree = g.degree(r)
    u = compute_utility(g, r, cfg.utility)
    if len(u) == 0:
        return AccuracyRecord(target, degree, skipped=True, reason="no candidates")
    if u.is_all_zero:
        return AccuracyRecord(target, degree, skipped=True, reason="all candidate utilities are zero")

    try:
        delta_f = sensitivity_bound(cfg.utility, g, r).delta_f
        t = t_formula(cfg.utility.kind, u.u_max, degree, ties_at_max=u.ties_at_max)
        accuracies = {}
        for eps in cfg.epsilons:
            p = PrivacyParams(eps, delta_f, cfg.seed)
            exp_acc = lap_acc = smooth_acc = None
            if Mechanism.EXPONENTIAL in cfg.mechanisms:
                exp_acc = expected_accuracy(exponential_distribution(u, p), u)
            if Mechanism.LAPLACE in cfg.mechanisms:
                lap_acc = monte_carlo_accuracy(u, p, cfg.trials, stream_key=(target,))
            if Mechanism.SMOOTHING in cfg.mechanisms:
                x = cfg.smoothing_x if cfg.smoothing_x is not None else smoothing_x(eps, len(u))
                smooth_acc = expected_accuracy(smoothed_best(u, x), u)
            bound = tightest_accuracy_bound(u, t, eps)
            accuracies[eps] = EpsilonAccuracy(bound, exp_acc, lap_acc, smooth_acc)
    except SocRecError as exc:
        return AccuracyRecord(target, degree, u.u_max, skipped=True, reason=str(exc))
    return AccuracyRecord(target, degree, u.u_max, t, accuracies)


_worker_state: Optional[Tuple[Graph, ExperimentConfig]] = None


def _init_worker(g: Graph, cfg: ExperimentConfig) -> None:
    global _worker_state
    _worker_state = (g, cfg)


def _evaluate_in_worker(r: int) -> AccuracyRecord:
    assert _worker_state is not None
    g, cfg = _worker_state
    return _evaluate_safely(g, r, cfg)


def _evaluate_safely(g: Graph, r: int, cfg: ExperimentConfig) -> AccuracyRecord:
    try:
        return evaluate_target(g, r, cfg)
    except Exception as exc:
        logger.exception("target %d failed", g.original_id(r))
        return AccuracyRecord(g.original_id(r), g.degree(r), skipped=True, reason=f"error: {exc}")


def run_experiment(cfg: ExperimentConfig, graph: Optional[Graph] = None) -> List[AccuracyRecord]:
    """
    Evaluate every sampled target of ``cfg.graph_path`` (or ``graph``).

    Results do not depend on ``cfg.workers``: each target draws Laplace noise
    from its own (seed, target) stream and records come back sorted by target.
    """
    g = graph if graph is not None else load_edge_list(cfg.graph_path, cfg.directed)
    targets = sample_targets(g, cfg.sample_fraction, cfg.seed)
    logger.info("evaluating %d targets with %s, epsilons=%s, workers=%d",
                len(targets), cfg.utility.label(), list(cfg.epsilons), cfg.workers)

    if cfg.workers == 1:
        records = []
        for done, r in enumerate(targets, start=1):
            records.append(_evaluate_safely(g, r, cfg))
            if done % 100 == 0:
                logger.info("evaluated %d/%d targets", done, len(targets))
    else:
        chunksize = max(1, len(targets) // (cfg.workers * 8))
        with ProcessPoolExecutor(cfg.workers, initializer=_init_worker, initargs=(g, cfg)) as pool:
            records = list(pool.map(_evaluate_in_worker, targets, chunksize=chunksize))

    records.sort(key=lambda record: record.target)
    skipped = sum(record.skipped for record in records)
    logger.info("done: %d evaluated, %d skipped", len(records) - skipped, skipped)
    return records


def _fmt(value: Optional[float]) -> str:
    return "" if value is None else format(value, ".10g")


def write_records(records: Sequence[AccuracyRecord], sink: TextIO, epsilons: Sequence[float]) -> None:
    """One row per (target, epsilon) under ``RECORD_HEADER``."""
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(RECORD_HEADER)
    for record in sorted(records, key=lambda rec: rec.target):
        for eps in sorted(epsilons):
            acc = record.accuracies.get(eps)
            writer.writerow([
                record.target,
                record.degree,
                _fmt(record.u_max),
                "" if record.t is None else record.t,
                _fmt(eps),
                _fmt(acc.exp_accuracy) if acc else "",
                _fmt(acc.laplace_accuracy) if acc else "",
                _fmt(acc.bound_accuracy) if acc else "",
                "true" if record.skipped else "false",
                record.reason,
            ])


def _series_values(
    records: Sequence[AccuracyRecord], epsilon: float, series: str
) -> List[Tuple[AccuracyRecord, float, float]]:
    if series not in SERIES:
        raise DomainError(f"unknown series {series!r}; expected one of {', '.join(SERIES)}")
    rows = []
    for record in records:
        if record.skipped or epsilon not in record.accuracies:
            continue
        acc = record.accuracies[epsilon]
        value = acc.series(series)
        if value is not None:
            rows.append((record, value, acc.bound_accuracy))
    if not rows:
        raise DomainError(f"no {series} accuracies recorded at epsilon={epsilon:g}")
    return rows


def emit_cdf(
    records: Sequence[AccuracyRecord], epsilon: float, series: str, sink: Optional[TextIO] = None
) -> List[Tuple[float, float]]:
    """
    Fraction of evaluated targets with accuracy at or below each observed value.

    Skipped targets are left out of the denominator.
    """
    values = sorted(value for _, value, _ in _series_values(records, epsilon, series))
    total = len(values)
    table = []
    for position, value in enumerate(values, start=1):
        if position == total or values[position] != value:
            table.append((value, position / total))
    if sink is not None:
        writer = csv.writer(sink, lineterminator="\n")
        writer.writerow(["threshold", "fraction"])
        writer.writerows((_fmt(threshold), _fmt(fraction)) for threshold, fraction in table)
    return table


def emit_degree_table(
    records: Sequence[AccuracyRecord], epsilon: float, series: str, sink: Optional[TextIO] = None
) -> List[Tuple[int, float, float]]:
    """Mean accuracy and mean bound per target degree."""
    rows = sorted(_series_values(records, epsilon, series), key=lambda row: row[0].degree)
    table = []
    for degree, group in groupby(rows, key=lambda row: row[0].degree):
        members = list(group)
        table.append((
            degree,
            float(np.mean([value for _, value, _ in members])),
            float(np.mean([bound for _, _, bound in members])),
        ))
    if sink is not None:
        writer = csv.writer(sink, lineterminator="\n")
        writer.writerow(["degree", "mean_accuracy", "bound"])
        writer.writerows((degree, _fmt(mean), _fmt(bound)) for degree, mean, bound in table)
    return table


def table_path(output_path: str, kind: str, series: str, epsilon: float) -> Path:
    """Sibling path ``<stem>.<kind>.<series>.eps<epsilon>.csv`` of the records file."""
    out = Path(output_path)
    return out.with_name(f"{out.stem}.{kind}.{series}.eps{epsilon:g}.csv")


def write_outputs(records: Sequence[AccuracyRecord], cfg: ExperimentConfig) -> List[Path]:
    """Write the records CSV plus CDF and degree tables for every available series."""
    if not cfg.output_path:
        raise ConfigError("an output path is required")
    written = [Path(cfg.output_path)]
    with open(cfg.output_path, "w", newline="") as sink:
        write_records(records, sink, cfg.epsilons)

    series = [m.value for m in cfg.mechanisms] + ["bound"]
    if not any(not record.skipped for record in records):
        logger.warning("every target was skipped; no CDF tables written")
        return written
    for eps in cfg.epsilons:
        for name in series:
            for kind, emit in (("cdf", emit_cdf), ("degree", emit_degree_table)):
                path = table_path(cfg.output_path, kind, name, eps)
                with open(path, "w", newline="") as sink:
                    emit(records, eps, name, sink)
                written.append(path)
    return written


def generate_synthetic(nodes: int, edges_per_node: int, seed: int) -> Graph:
    """Preferential-attachment graph: (nodes - m) * m edges, connected, fixed by the seed."""
    if not nodes > edges_per_node >= 1:
        raise DomainError(f"need nodes > edges_per_node >= 1, got nodes={nodes}, m={edges_per_node}")
    return Graph.from_networkx(nx.barabasi_albert_graph(nodes, edges_per_node, seed=seed))
