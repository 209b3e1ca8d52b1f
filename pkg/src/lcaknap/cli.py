"""Command-line entry point: ``lcaknap <subcommand> ...``.

Every subcommand prints JSON to stdout. ``experiment --check`` exits with
status 1 when any row violates its acceptance threshold.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import experiment as ex
from .hardness import FAMILIES, STRATEGIES
from .instance import as_fraction, load_instance
from .lca import convert_greedy, decide, build_reduced, mapping_greedy
from .oracles import ORACLES, fractional_greedy_value
from .sampling import RandomnessPlan


def _fraction(text: str) -> Fraction:
    try:
        return as_fraction(Fraction(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from exc


def _hex(text: str) -> str:
    try:
        bytes.fromhex(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"seed must be hex, got {text!r}") from exc
    return text


def _emit(record) -> None:
    print(json.dumps(record, sort_keys=True))


def _lca_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--instance", required=True)
    parser.add_argument("--epsilon", type=_fraction, required=True)
    parser.add_argument("--seed", type=_hex, required=True)
    parser.add_argument("--run-nonce", type=int, default=0)
    parser.add_argument("--tau", type=_fraction)
    parser.add_argument("--rho", type=_fraction)
    parser.add_argument("--beta", type=_fraction)
    parser.add_argument("--domain-bits", type=int, default=32)
    parser.add_argument("--construction", choices=("bisect", "threshold"), default="bisect")


def _run(args):
    instance = load_instance(args.instance)
    plan = RandomnessPlan.from_hex(args.seed, args.run_nonce)
    build = build_reduced(
        instance, args.epsilon, plan, d=args.domain_bits, construction=args.construction,
        tau=args.tau, rho=args.rho, beta=args.beta,
    )
    summary = convert_greedy(build.reduced, build.eps)
    base = {
        "samples_drawn": build.account.samples_drawn,
        "branch": summary.branch,
        "e_small": None if summary.e_small is None else str(summary.e_small),
        "t_prime": len(build.eps),
        "config": build.config.as_record(),
    }
    return instance, summary, base


def cmd_query(args) -> int:
    instance, summary, record = _run(args)
    if not 0 <= args.item < len(instance):
        raise SystemExit(f"item {args.item} out of range for {len(instance)} items")
    record["answer"] = decide(instance, args.item, args.epsilon, summary)
    _emit(record)
    return 0


def cmd_materialize(args) -> int:
    instance, summary, record = _run(args)
    chosen = mapping_greedy(summary, instance, args.epsilon)
    record.update({
        "answer": sorted(chosen),
        "weight": str(instance.total_weight(chosen)),
        "profit": str(instance.total_profit(chosen)),
        "feasible": instance.is_feasible(chosen),
    })
    _emit(record)
    return 0


def cmd_solve(args) -> int:
    instance = load_instance(args.instance)
    if args.oracle == "fractional":
        _emit({"oracle": "fractional", "value": str(fractional_greedy_value(instance))})
    else:
        record = ORACLES[args.oracle](instance).as_record()
        record["oracle"] = args.oracle
        _emit(record)
    return 0


def cmd_gen(args) -> int:
    specs = [ex.GeneratorSpec(args.profile, n, args.seed, args.capacity_fraction) for n in args.n]
    paths = ex.gen_instances(specs, args.out)
    _emit({"files": [str(p) for p in paths]})
    return 0


def cmd_experiment(args) -> int:
    generators = tuple(
        ex.GeneratorSpec(profile, n, args.gen_seed) for profile in args.profile for n in args.n
    ) if not args.instance else ()
    config = ex.ExperimentConfig(
        kind=args.kind,
        epsilons=tuple(args.epsilon),
        trials=args.trials,
        seed=args.seed,
        instances=tuple(args.instance),
        generators=generators,
        ns=tuple(args.n) if args.kind == "querycount" else ex.ExperimentConfig.ns,
        output=args.output,
    )
    rows = ex.run_experiment(config)
    violations = []
    for row in rows:
        if row["kind"] == "querycount":
            if len(row["samples_per_query"]) != 1 or row["samples_per_query"] != row["m_plus_a"]:
                row["violations"] = ["samples per query differ from m + a"]
            else:
                row["violations"] = []
        violations.extend(row["violations"])
    if args.kind == "querycount":
        per_eps = {}
        for row in rows:
            per_eps.setdefault(row["epsilon"], set()).update(row["samples_per_query"])
        violations.extend(f"samples vary with n at eps={e}" for e, s in per_eps.items() if len(s) > 1)
    if args.output:
        ex.write_rows(rows, args.output)
    else:
        for row in rows:
            _emit(row)
    if args.check and violations:
        print("\n".join(violations), file=sys.stderr)
        return 1
    return 0


def cmd_hardness(args) -> int:
    row = ex.hardness_row(args.strategy, args.family, args.n, args.trials, args.budget, args.seed)
    _emit(row)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lcaknap", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write generated instances")
    p.add_argument("--profile", choices=ex.PROFILES, default="uniform")
    p.add_argument("--n", type=int, nargs="+", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--capacity-fraction", type=_fraction, default=Fraction(1, 4))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("query", help="answer one membership query")
    _lca_options(p)
    p.add_argument("--item", type=int, required=True)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("materialize", help="print the full solution of one run")
    _lca_options(p)
    p.set_defaults(func=cmd_materialize)

    p = sub.add_parser("solve", help="run a reference solver")
    p.add_argument("--instance", required=True)
    p.add_argument("--oracle", choices=(*ORACLES, "fractional"), default="dp")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("experiment", help="batch experiments")
    p.add_argument("kind", choices=("consistency", "approx", "querycount"))
    p.add_argument("--instance", nargs="*", default=[])
    p.add_argument("--profile", nargs="+", choices=ex.PROFILES, default=["mixed"])
    p.add_argument("--n", type=int, nargs="+", default=[100, 1000])
    p.add_argument("--gen-seed", type=int, default=0)
    p.add_argument("--epsilon", type=_fraction, nargs="+", default=list(ex.DEFAULT_EPSILONS[:3]))
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=_hex, default="00")
    p.add_argument("--output")
    p.add_argument("--check", action="store_true")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("hardness", help="adversary simulation on a hard family")
    p.add_argument("--family", choices=FAMILIES, default="maximal_pair")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--budget", type=int)
    p.add_argument("--strategy", choices=tuple(STRATEGIES), default="always_yes")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_hardness)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
