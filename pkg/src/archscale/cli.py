"""Command-line experiment runner.

Subcommands: ``validate`` an architecture document, print the capacity
``ladder``, ``plan`` a placement and its orchestrations, ``simulate`` one
policy, and ``compare`` policies end to end.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from fractions import Fraction
from pathlib import Path

from .capacity import build_capacity_table, ladder_to_text, synthesize_scale_ladder
from .document import ParseError, load_architecture
from .experiment import (
    DEFAULT_INCREMENTS,
    ExperimentError,
    ExperimentSpec,
    load_experiment_spec,
    run_experiment,
)
from .model import validate_architecture
from .planner import (
    DeploymentRegistry,
    orchestration_to_script,
    plan_placement,
    synthesize_orchestration,
    synthesize_undeployment,
)
from .simulator import Policy


def reference_architecture_path() -> Path:
    return Path(__file__).parent / "data" / "reference_architecture.json"


def _add_arch(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--arch", default=str(reference_architecture_path()),
                        help="architecture document (default: bundled reference)")


def _parse_increments(text: str) -> list[Fraction]:
    return [Fraction(part.strip()) for part in text.split(",") if part.strip()]


def cmd_validate(args: argparse.Namespace) -> int:
    arch = load_architecture(args.arch)
    report = validate_architecture(arch)
    if report.ok:
        print(f"ok: {len(arch.services)} services, {len(arch.vm_catalog)} VM types")
        return 0
    for violation in report:
        print(f"violation: {violation}")
    return 1


def cmd_ladder(args: argparse.Namespace) -> int:
    arch = load_architecture(args.arch)
    table = build_capacity_table(arch)
    ladder = synthesize_scale_ladder(Fraction(args.base), _parse_increments(args.increments), table)
    print(table.to_text(), end="")
    print()
    print(ladder_to_text(ladder, table), end="")
    return 0


def cmd_plan(args: argparse.Namespace) -> int:
    arch = load_architecture(args.arch)
    if args.delta:
        delta: dict[str, int] = {}
        for part in args.delta.split(","):
            name, _, count = part.partition("=")
            delta[name.strip()] = int(count)
    else:
        table = build_capacity_table(arch)
        ladder = synthesize_scale_ladder(Fraction(args.base), _parse_increments(args.increments), table)
        if not 1 <= args.delta_index <= ladder.num_scales:
            print(f"error: delta index must lie in 1..{ladder.num_scales}", file=sys.stderr)
            return 1
        d = ladder.deltas[args.delta_index - 1]
        delta = {s.name: c for s, c in zip(arch.services, d.counts) if c > 0}
    placement = plan_placement(delta, arch, arch.vm_catalog)
    print(f"placement cost: {float(placement.total_cost):g} "
          f"({len(placement.acquired_vms)} VMs)")
    for vm_type, idx in placement.acquired_vms:
        services = ", ".join(placement.services_on(idx))
        print(f"  vm#{idx} {vm_type.name}: {services}")
    registry = DeploymentRegistry(arch)
    base = {s.name: 1 for s in arch.services}
    registry.apply(synthesize_orchestration(plan_placement(base, arch, arch.vm_catalog), arch, registry))
    orch = synthesize_orchestration(placement, arch, registry)
    print("\ndeployment orchestration:")
    print(orchestration_to_script(orch), end="")
    print("\nundeployment orchestration:")
    print(orchestration_to_script(synthesize_undeployment(orch)), end="")
    return 0


def _spec_from_args(args: argparse.Namespace) -> ExperimentSpec:
    if args.spec:
        spec = load_experiment_spec(args.spec)
    else:
        spec = ExperimentSpec(architecture=str(reference_architecture_path()))
    if args.arch:
        spec = replace(spec, architecture=args.arch)
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    if args.exact_arrivals:
        spec = replace(spec, exact_arrivals=True)
    if args.out:
        spec = replace(spec, output=args.out)
    if args.policy:
        policies = (Policy.GLOBAL, Policy.LOCAL) if args.policy == "both" else (args.policy,)
        spec = replace(spec, policies=policies)
    return spec


def cmd_simulate(args: argparse.Namespace) -> int:
    spec = _spec_from_args(args)
    result = run_experiment(spec)
    for policy, timeline in result.timelines.items():
        print(f"{policy}: generated={timeline.generated} completed={timeline.completed} "
              f"lost={timeline.lost} dropped={timeline.dropped_requests}")
    print(f"artifacts written to {result.out_dir}")
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    spec = _spec_from_args(args)
    if len(spec.policies) < 2:
        spec = replace(spec, policies=(Policy.GLOBAL, Policy.LOCAL))
    result = run_experiment(spec)
    print(result.report.to_text(), end="")
    print(f"artifacts written to {result.out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="archscale",
        description="Microservice pipeline capacity planning, deployment "
                    "orchestration and autoscaling simulation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check an architecture document")
    _add_arch(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("ladder", help="print the capacity table and scale ladder")
    _add_arch(p)
    p.add_argument("--base", default="60", help="base target rate, emails/sec")
    p.add_argument("--increments", default=",".join(str(i) for i in DEFAULT_INCREMENTS),
                   help="comma-separated scale increments, emails/sec")
    p.set_defaults(func=cmd_ladder)

    p = sub.add_parser("plan", help="plan a placement and dump its orchestrations")
    _add_arch(p)
    p.add_argument("--delta", default=None,
                   help="explicit increment, e.g. 'VirusScanner=2,MessageAnalyser=1'")
    p.add_argument("--delta-index", type=int, default=1,
                   help="ladder delta to plan when --delta is not given (1-based)")
    p.add_argument("--base", default="60")
    p.add_argument("--increments", default=",".join(str(i) for i in DEFAULT_INCREMENTS))
    p.set_defaults(func=cmd_plan)

    for name, fn, help_text in (
        ("simulate", cmd_simulate, "run the selected policy and write metrics"),
        ("compare", cmd_compare, "run global and local policies and compare"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--arch", default=None, help="architecture document override")
        p.add_argument("--spec", default=None, help="experiment spec file (JSON)")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--policy", choices=["global", "local", "both"], default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--exact-arrivals", action="store_true")
        p.set_defaults(func=fn)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ExperimentError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
