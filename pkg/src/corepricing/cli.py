"""Command-line entry point: generate, price, compare, verify."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from corepricing.formats import load_instance, outcome_to_json, save_instance
from corepricing.harness import (
    MECHANISMS,
    Epsilon,
    GeneratorConfig,
    compare,
    fairness_by_ads,
    generate,
    name_instances,
    revenue_table,
    write_table,
)
from corepricing.oracles import oracle_for
from corepricing.pricing import reconstruct_outcome, vcg_pursuit, water_fill
from corepricing.verification import (
    check_core_membership,
    check_eps_bidder_optimal,
    enumerate_polytope,
    min_revenue_core_point,
)


def cmd_generate(args) -> int:
    data = json.loads(Path(args.config).read_text()) if args.config else {}
    if args.seed is not None:
        data["seed"] = args.seed
    config = GeneratorConfig.from_dict(data)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    named = name_instances(generate(config))
    for instance_id, instance in named.items():
        save_instance(instance, out / f"{instance_id}.json")
    print(f"wrote {len(named)} instances to {out}")
    return 0


def cmd_price(args) -> int:
    instance = load_instance(args.instance)
    oracle = oracle_for(instance)
    epsilon = Epsilon.parse(args.epsilon)
    if args.mechanism in ("core", "vcg-pursuit"):
        eps = epsilon.resolve(oracle)
        run = water_fill if args.mechanism == "core" else vcg_pursuit
        point, trace = run(oracle, eps)
        outcome = reconstruct_outcome(
            oracle, point, trace.base, check=False, mechanism=args.mechanism
        )
        outcome.oracle_calls = trace.oracle_calls + trace.target_calls
        if args.trace:
            Path(args.trace).write_text(trace.to_jsonl())
        result = outcome_to_json(outcome)
        result["utilities_micro"] = {str(i): v for i, v in sorted(point.items())}
        result["epsilon_micro"] = eps
    else:
        from corepricing.harness import run_mechanism

        eps = epsilon.resolve(oracle) if args.mechanism == "vcg-pursuit" else 0
        result = outcome_to_json(run_mechanism(args.mechanism, instance, eps))
    print(json.dumps(result, indent=2))
    return 0


def cmd_compare(args) -> int:
    folder = Path(args.instances)
    paths = sorted(folder.glob("*.json"))
    instances = {p.stem: load_instance(p) for p in paths}
    mechanisms = [m.strip() for m in args.mechanisms.split(",") if m.strip()]
    report = compare(instances, mechanisms, Epsilon.parse(args.epsilon), args.workers)
    Path(args.out).write_text(report.to_csv())
    if args.summary:
        Path(args.summary).write_text(write_table(revenue_table(report, instances)))
    if args.fairness:
        Path(args.fairness).write_text(write_table(fairness_by_ads(report, instances, args.bucket)))
    for instance_id, mechanism, error in report.failures:
        print(f"failed: {instance_id} {mechanism}: {error}", file=sys.stderr)
    print(f"{len(report.rows)} rows written to {args.out}")
    return 1 if report.failures else 0


def _read_point(text: str, bidders) -> dict[int, int]:
    path = Path(text)
    data = json.loads(path.read_text() if path.is_file() else text)
    if isinstance(data, list):
        if len(data) != len(bidders):
            raise ValueError(f"point has {len(data)} entries for {len(bidders)} bidders")
        return {i: int(v) for i, v in zip(bidders, data)}
    point = {int(k): int(v) for k, v in data.items()}
    return {i: point.get(i, 0) for i in bidders}


def cmd_verify(args) -> int:
    instance = load_instance(args.instance)
    polytope = enumerate_polytope(instance)
    point = _read_point(args.point, polytope.bidders)
    in_core = check_core_membership(polytope, point)
    optimal = check_eps_bidder_optimal(polytope, point, args.epsilon)
    best = min_revenue_core_point(polytope)
    result = {
        "in_core": in_core,
        "eps_bidder_optimal": optimal,
        "total_welfare_micro": polytope.total,
        "min_core_revenue_micro": str(polytope.total - sum(best.values())),
    }
    if in_core:
        outcome = reconstruct_outcome(oracle_for(instance), point)
        result["revenue_micro"] = outcome.revenue
    print(json.dumps(result, indent=2))
    return 0 if in_core and optimal else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="corepricing", description="Core pricing for combinatorial and rich-ad auctions."
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write synthetic slate instances")
    p.add_argument("--config", help="JSON file of generator settings")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("price", help="run one mechanism on one instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--mechanism", choices=MECHANISMS, default="core")
    p.add_argument("--epsilon", default="rel:0.0001", help="micro-units, or rel:<fraction>")
    p.add_argument("--trace", help="write the water-filling trace as JSON lines")
    p.set_defaults(func=cmd_price)

    p = sub.add_parser("compare", help="compare mechanisms over a folder of instances")
    p.add_argument("--instances", required=True)
    p.add_argument("--mechanisms", default=",".join(MECHANISMS))
    p.add_argument("--epsilon", default="rel:0.0001")
    p.add_argument("--out", required=True)
    p.add_argument("--summary", help="write per-line-limit means here")
    p.add_argument("--fairness", help="write fairness by number of ads here")
    p.add_argument("--bucket", type=int, default=25, help="ad-count bin width for --fairness")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("verify", help="check a utility vector against the core")
    p.add_argument("--instance", required=True)
    p.add_argument("--point", required=True, help="JSON object or list, or a file")
    p.add_argument("--epsilon", type=int, default=0)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
