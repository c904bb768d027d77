#!/usr/bin/env python3
"""
Command-line interface: ``socrec-dp {experiment,bound,audit,oracle,synth}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 audit failure.
"""

import argparse
import logging
import sys
from typing import Dict, List, Optional, Sequence

from . import __version__
from .audit import (
    audit_mechanism,
    audit_params,
    brute_force_sensitivity,
    brute_force_t_all,
    random_graph_population,
    sensitivity_violations,
    small_graph_population,
)
from .bounds import (
    ASYMPTOTIC_MODE_NAMES,
    AsymptoticMode,
    BoundInputs,
    accuracy_upper_bound,
    asymptotic_epsilon,
    epsilon_lower_bound,
    t_formula,
)
from .errors import SocRecError
from .experiment import (
    AccuracyRecord,
    ExperimentConfig,
    emit_cdf,
    generate_synthetic,
    load_config_file,
    run_experiment,
    sweep_from_settings,
    write_outputs,
)
from .graph import load_edge_list, write_edge_list
from .mechanisms import Mechanism, PrivacyParams
from .utility import UtilityConfig, UtilityKind, candidate_set, compute_utility

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_AUDIT = 3


class UsageError(Exception):
    """Raised instead of argparse's SystemExit(2) so usage errors map to exit 1."""

    def __init__(self, message: str, usage: str):
        super().__init__(message)
        self.usage = usage


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message, self.format_usage())


def _add_utility_flags(parser: argparse.ArgumentParser, sweep: bool = False) -> None:
    parser.add_argument("--utility", choices=["common-neighbors", "weighted-paths"],
                        help="utility function (default common-neighbors)")
    if sweep:
        parser.add_argument("--gamma", type=float, action="append",
                            help="weighted-paths damping factor; repeatable (default 0.05, 0.005, 0.0005)")
    else:
        parser.add_argument("--gamma", type=float, help="weighted-paths damping factor")
    parser.add_argument("--max-path-len", type=int, help="weighted-paths walk length L (default 3)")
    parser.add_argument("--degree-cap", type=int,
                        help="public bound on the maximum degree used by the weighted-paths sensitivity")


def _add_graph_flags(parser: argparse.ArgumentParser, required: bool = True) -> None:
    parser.add_argument("--graph", required=required, help="edge-list file")
    parser.add_argument("--directed", action=argparse.BooleanOptionalAction, default=None,
                        help="treat each line as an arc")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="socrec-dp", description="Private social recommendation toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    experiment = sub.add_parser("experiment", help="accuracy of private mechanisms vs. the bound")
    experiment.add_argument("--config", help="flat key=value file; flags override it")
    _add_graph_flags(experiment, required=False)
    _add_utility_flags(experiment, sweep=True)
    experiment.add_argument("--epsilon", type=float, action="append", help="repeatable")
    experiment.add_argument("--sample-frac", type=float)
    experiment.add_argument("--trials", type=int)
    experiment.add_argument("--seed", type=int)
    experiment.add_argument("--mechanisms", help="comma list of exponential,laplace,smoothing")
    experiment.add_argument("--smoothing-x", type=float)
    experiment.add_argument("--out", help="records CSV; tables are written beside it")
    experiment.add_argument("--workers", type=int)

    bound = sub.add_parser("bound", help="privacy/accuracy trade-off calculators")
    bound.add_argument("--n", type=int, required=True, help="number of candidates")
    bound.add_argument("--k", type=int, help="size of the high-utility group")
    bound.add_argument("--c", type=float, help="low-group threshold parameter")
    bound.add_argument("--t", type=int, help="edits needed to promote a low node")
    target = bound.add_mutually_exclusive_group()
    target.add_argument("--epsilon", type=float, help="report the accuracy upper bound")
    target.add_argument("--delta", type=float, help="report the epsilon lower bound")
    bound.add_argument("--mode", choices=ASYMPTOTIC_MODE_NAMES,
                       help="asymptotic epsilon for a large-graph regime")
    bound.add_argument("--beta", type=int, help="top-beta utility concentration (with --mode)")
    bound.add_argument("--d", type=int, help="t, d_max or d_r depending on --mode")
    bound.add_argument("--s", type=float, help="gamma * d_max (weighted-paths mode)")
    bound.add_argument("--precision", type=int, default=2)

    audit = sub.add_parser("audit", help="exhaustive privacy audit on a small graph")
    _add_graph_flags(audit)
    _add_utility_flags(audit)
    audit.add_argument("--target", type=int, action="append", help="original id; default all nodes")
    audit.add_argument("--mechanism", choices=[m.value for m in Mechanism], default="exponential")
    audit.add_argument("--epsilon", type=float, default=1.0)
    audit.add_argument("--delta-f", type=float, help="override the derived sensitivity")
    audit.add_argument("--smoothing-x", type=float)
    audit.add_argument("--tol", type=float, default=1e-6)
    audit.add_argument("--strict", action="store_true", help="also audit edits incident to the target")

    oracle = sub.add_parser("oracle", help="brute-force t or sensitivity")
    oracle.add_argument("quantity", choices=["t", "sensitivity"])
    _add_graph_flags(oracle, required=False)
    _add_utility_flags(oracle)
    oracle.add_argument("--target", type=int, help="original id (t oracle)")
    oracle.add_argument("--max-depth", type=int, default=5)
    oracle.add_argument("--max-nodes", type=int, default=5, help="exhaustive population size")
    oracle.add_argument("--random", type=int, default=0, help="use this many random graphs instead")
    oracle.add_argument("--nodes", type=int, default=8)
    oracle.add_argument("--edge-prob", type=float, default=0.4)
    oracle.add_argument("--seed", type=int, default=0)

    synth = sub.add_parser("synth", help="write a preferential-attachment edge list")
    synth.add_argument("--nodes", type=int, required=True)
    synth.add_argument("--edges-per-node", type=int, required=True)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--out", required=True)
    return parser


def _utility_config(args: argparse.Namespace) -> UtilityConfig:
    kind = UtilityKind.parse(args.utility or "common-neighbors")
    max_len = args.max_path_len if args.max_path_len is not None else 3
    if kind is UtilityKind.COMMON_NEIGHBORS:
        return UtilityConfig(kind, args.gamma, max_len)
    gamma = 0.005 if args.gamma is None else args.gamma
    return UtilityConfig(kind, gamma, max_len, args.degree_cap)


def _run_experiment(args: argparse.Namespace) -> int:
    settings: Dict[str, object] = {}
    if args.config:
        settings.update(load_config_file(args.config))
    flags = {
        "graph": args.graph,
        "directed": args.directed,
        "utility": args.utility,
        "gamma": args.gamma,
        "max_path_len": args.max_path_len,
        "degree_cap": args.degree_cap,
        "epsilon": args.epsilon,
        "sample_frac": args.sample_frac,
        "trials": args.trials,
        "seed": args.seed,
        "mechanisms": args.mechanisms,
        "smoothing_x": args.smoothing_x,
        "out": args.out,
        "workers": args.workers,
    }
    settings.update({key: value for key, value in flags.items() if value is not None})
    configs = sweep_from_settings(settings)
    first = configs[0]
    if not first.graph_path or not first.output_path:
        raise UsageError("experiment needs --graph and --out (or a config file naming them)", "")

    g = load_edge_list(first.graph_path, first.directed)
    for cfg in configs:
        if len(configs) > 1:
            print(f"== {cfg.utility.label()}")
        records = run_experiment(cfg, graph=g)
        for path in write_outputs(records, cfg):
            print(f"wrote {path}")
        _print_summary(records, cfg)
    return EXIT_OK


def _print_summary(records: List[AccuracyRecord], cfg: ExperimentConfig) -> None:
    evaluated = [record for record in records if not record.skipped]
    print(f"targets: {len(records)} sampled, {len(evaluated)} evaluated, "
          f"{len(records) - len(evaluated)} skipped")
    if not evaluated:
        return
    for eps in cfg.epsilons:
        for series in [m.value for m in cfg.mechanisms] + ["bound"]:
            table = emit_cdf(records, eps, series)
            below = max((fraction for threshold, fraction in table if threshold < 0.5), default=0.0)
            print(f"eps={eps:g} {series:<12} fraction with accuracy < 0.5: {below:.3f}")


def _run_bound(args: argparse.Namespace) -> int:
    digits = args.precision
    if args.mode:
        if args.beta is None or args.d is None:
            raise UsageError("--mode needs --beta and --d", "")
        value = asymptotic_epsilon(AsymptoticMode(args.mode), args.n, args.beta, args.d, args.s)
        print("no constraint" if value is None else f"{value:.{digits}f}")
        return EXIT_OK
    if args.k is None or args.c is None or args.t is None:
        raise UsageError("bound needs --k, --c and --t (or --mode)", "")
    if args.epsilon is not None:
        inputs = BoundInputs(args.n, args.k, args.c, args.t, epsilon=args.epsilon)
        print(f"{accuracy_upper_bound(inputs):.{digits}f}")
    elif args.delta is not None:
        value = epsilon_lower_bound(BoundInputs(args.n, args.k, args.c, args.t, delta=args.delta))
        print("no constraint" if value is None else f"{value:.{digits}f}")
    else:
        raise UsageError("bound needs --epsilon or --delta", "")
    return EXIT_OK


def _run_audit(args: argparse.Namespace) -> int:
    g = load_edge_list(args.graph, bool(args.directed))
    cfg = _utility_config(args)
    mechanism = Mechanism(args.mechanism)
    targets = [g.dense_id(t) for t in args.target] if args.target else range(g.node_count)
    failures = 0
    for r in targets:
        if not candidate_set(g, r):
            print(f"SKIP target={g.original_id(r)}: no candidates")
            continue
        if args.delta_f is not None:
            p = PrivacyParams(args.epsilon, args.delta_f)
        else:
            p = audit_params(cfg, g, r, args.epsilon)
        report = audit_mechanism(g, r, mechanism, cfg, p, args.tol, args.smoothing_x,
                                 relaxed=not args.strict)
        print(report.summary(g.original_id(r)))
        failures += not report.passed
    return EXIT_AUDIT if failures else EXIT_OK


def _run_oracle(args: argparse.Namespace) -> int:
    cfg = _utility_config(args)
    if args.quantity == "t":
        if args.graph is None or args.target is None:
            raise UsageError("the t oracle needs --graph and --target", "")
        g = load_edge_list(args.graph, bool(args.directed))
        r = g.dense_id(args.target)
        u = compute_utility(g, r, cfg)
        found = brute_force_t_all(g, r, cfg, args.max_depth)
        formula = t_formula(cfg.kind, u.u_max, g.degree(r), ties_at_max=u.ties_at_max)
        print(f"t_formula={formula}")
        for x, t in found.items():
            shown = "not found" if t is None else str(t)
            print(f"candidate={g.original_id(x)} u={u.value_of(x):g} brute_force_t={shown}")
        return EXIT_OK

    if args.random:
        population = random_graph_population(args.random, args.nodes, args.edge_prob, args.seed)
    else:
        population = small_graph_population(args.max_nodes)
    observed = brute_force_sensitivity(cfg, population)
    violations = sensitivity_violations(cfg, population)
    print(f"graphs={len(population)} max_observed_l1_change={observed:g} violations={len(violations)}")
    for violation in violations[:10]:
        print(f"  target={violation.target} edit={violation.edit} "
              f"observed={violation.observed:g} bound={violation.bound:g}")
    return EXIT_AUDIT if violations else EXIT_OK


def _run_synth(args: argparse.Namespace) -> int:
    g = generate_synthetic(args.nodes, args.edges_per_node, args.seed)
    with open(args.out, "w") as sink:
        write_edge_list(g, sink, header=[
            "synthetic preferential-attachment graph (not a real network)",
            f"nodes={args.nodes} edges_per_node={args.edges_per_node} seed={args.seed}",
        ])
    print(f"wrote {args.out} ({g.node_count} nodes, {g.edge_count} edges)")
    return EXIT_OK


COMMANDS = {
    "experiment": _run_experiment,
    "bound": _run_bound,
    "audit": _run_audit,
    "oracle": _run_oracle,
    "synth": _run_synth,
}


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity == 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv) if argv is not None else None)
        _configure_logging(args.verbose)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        if exc.usage:
            print(exc.usage, file=sys.stderr, end="")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SocRecError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
