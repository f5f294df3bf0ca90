"""Command-line entry points.

Subcommands: validate, simulate, batch, critical-points, lemma-bounds.
Exit codes: 0 success, 2 validation/parse failure, 3 simulation fatal,
4 I/O error.
"""

import argparse
import dataclasses
import json
import sys

from .errors import HypothesisViolated, ParseError, SimulationFatal, ValidationError
from .ppta import PptaSchedule, residual_set_bounds
from .scenario import (
    batch,
    critical_points_report,
    load_initials,
    load_scenario,
    metrics_to_dict,
    run,
    validate_scenario,
)

_EXIT_OK = 0
_EXIT_VALIDATION = 2
_EXIT_SIM_FATAL = 3
_EXIT_IO = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="boresight",
        description="Prescribed-time pointing-constrained boresight reorientation runs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a scenario file")
    p.add_argument("file")

    p = sub.add_parser("simulate", help="run one scenario and write outputs")
    p.add_argument("file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--controller", choices=["ibgc", "apf", "pd"], help="override controller kind")
    p.add_argument("--dt", type=float, help="override integration step (s)")
    p.add_argument("--clamp", type=float, help="per-axis torque limit (N m)")
    p.add_argument(
        "--guidance-only", action="store_true", help="propagate the reference flow only"
    )

    p = sub.add_parser("batch", help="multi-start campaign")
    p.add_argument("file")
    p.add_argument("--n", type=int, help="number of random initial orientations")
    p.add_argument("--seed", type=int, help="seed for random initials")
    p.add_argument("--initials", help="YAML file with an 'initials' list")
    p.add_argument("--out", help="output directory (per-run subdirectories)")
    p.add_argument("--workers", type=int, default=1, help="parallel worker processes")

    p = sub.add_parser("critical-points", help="report flow critical points per zone")
    p.add_argument("file")

    p = sub.add_parser("lemma-bounds", help="residual-set levels of the comparison system")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--T", type=float, required=True, dest="T")
    p.add_argument("--Tstar", type=float, required=True)
    p.add_argument("--V0", type=float, required=True, dest="V0")
    return parser


def _cmd_validate(args) -> int:
    sc = load_scenario(args.file)
    print(f"scenario '{sc.name}' is valid")
    print(f"  zones: {len(sc.guidance.zones)} (1 virtual)")
    print(f"  controller: {sc.controller_kind}, t_end: {sc.t_end} s, dt: {sc.dt} s")
    return _EXIT_OK


def _cmd_simulate(args) -> int:
    sc = load_scenario(args.file)
    overrides = {}
    if args.controller:
        overrides["controller_kind"] = args.controller
    if args.dt:
        overrides["dt"] = args.dt
    if args.guidance_only:
        overrides["guidance_only"] = True
    if overrides:
        sc = dataclasses.replace(sc, **overrides)
    if args.clamp is not None:
        sc = dataclasses.replace(
            sc, plant=dataclasses.replace(sc.plant, torque_limit=args.clamp)
        )
    validate_scenario(sc)
    metrics = run(sc, args.out)
    print(json.dumps(metrics_to_dict(metrics), indent=2))
    return _EXIT_OK if metrics.status == "completed" else _EXIT_SIM_FATAL


def _cmd_batch(args) -> int:
    sc = load_scenario(args.file)
    initials = None
    if args.initials:
        initials = load_initials(args.initials)
    elif args.n is None:
        raise ValidationError(["batch needs --n COUNT or --initials FILE"])
    results = batch(
        sc,
        initials=initials,
        count=args.n,
        seed=args.seed,
        output_dir=args.out,
        workers=args.workers,
    )
    print("index status      conv_time final_error      min_clearance  max_xi")
    for i, m in enumerate(results):
        min_clear = min(m.min_zone_clearance)
        conv = "never" if m.convergence_time is None else str(m.convergence_time)
        print(
            f"{i:5d} {m.status:11s} {conv:>9s} {m.final_error!r:16s} "
            f"{min_clear!r:14s} {m.max_xi!r}"
        )
    return _EXIT_OK


def _cmd_critical_points(args) -> int:
    sc = load_scenario(args.file)
    report = critical_points_report(sc)
    print(json.dumps(report, indent=2))
    return _EXIT_OK


def _cmd_lemma_bounds(args) -> int:
    sched = PptaSchedule(horizon=args.T, saturation=args.Tstar)
    bounds = residual_set_bounds(args.alpha, args.beta, sched, args.V0)
    print(json.dumps(dataclasses.asdict(bounds), indent=2))
    return _EXIT_OK


_COMMANDS = {
    "validate": _cmd_validate,
    "simulate": _cmd_simulate,
    "batch": _cmd_batch,
    "critical-points": _cmd_critical_points,
    "lemma-bounds": _cmd_lemma_bounds,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ParseError, ValidationError, HypothesisViolated) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_VALIDATION
    except SimulationFatal as exc:
        print(f"simulation fatal: {exc}", file=sys.stderr)
        return _EXIT_SIM_FATAL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return _EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
