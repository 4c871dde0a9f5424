"""Command-line entry point: ``geotool <command> ...``."""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys

import numpy as np

from .errors import GeotoolError
from .geometry import RobotParams, christoffel_closed_form, christoffel_oracle, metric_at
from .harness import critical_point_report, export, load_scenario, run
from .harness.scenario import builtin_names
from .kinematics import singularity_map


def _read_scenario(arg: str):
    if arg in builtin_names():
        return load_scenario(arg)
    if os.path.isfile(arg):
        with open(arg) as fh:
            return load_scenario(fh.read())
    raise FileNotFoundError(f"no built-in scenario or file named {arg!r} "
                            f"(built-ins: {', '.join(builtin_names())})")


def _fmt(value):
    if value is None:
        return "n/a"
    if isinstance(value, float):
        return f"{value:.3e}"
    return str(value)


def cmd_simulate(args) -> int:
    scenario = _read_scenario(args.scenario)
    traj, metrics = run(scenario)
    if args.out:
        fmt = args.format or ("json" if args.out.endswith(".json") else "csv")
        export(traj, metrics, fmt, args.out, name=scenario.name)
    print(f"scenario          {scenario.name}  ({scenario.description or scenario.controller})")
    print(f"samples           {len(traj)}  (t = 0 .. {traj.final_time:g} s)")
    for key, value in metrics.as_dict().items():
        if key == "contract":
            continue
        print(f"{key:<17s} {_fmt(value)}")
    for key, ok in metrics.contract.items():
        print(f"contract {key:<8s} {'PASS' if ok else 'FAIL'}")
    spurious = critical_point_report(scenario)
    if scenario.constraint is not None:
        print(f"spurious critical points of V on the constraint: {len(spurious)}")
        for cp in spurious:
            print(f"  ({cp.point[0]: .6f}, {cp.point[1]: .6f})  distance to x_d {cp.distance:.6f}")
    if args.out:
        print(f"wrote {args.out}")
    return 1 if (args.check and not metrics.passed) else 0


def cmd_christoffel_check(args) -> int:
    params = RobotParams()
    rng = np.random.default_rng(args.seed)
    worst = 0.0
    for q in rng.uniform(-math.pi, math.pi, size=(args.n, 2)):
        closed = christoffel_closed_form(params, q).gamma
        oracle = christoffel_oracle(lambda p: metric_at(params, p), q).gamma
        worst = max(worst, float(np.max(np.abs(closed - oracle))))
    ok = worst <= args.tol
    print(f"{'PASS' if ok else 'FAIL'}: max |closed - oracle| = {worst:.3e} over {args.n} points "
          f"(tol {args.tol:g})")
    return 0 if ok else 1


def cmd_singularity_map(args) -> int:
    angles, margins = singularity_map(RobotParams(), args.grid)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["theta1", "theta2", "sing_margin"])
            for i, t1 in enumerate(angles):
                for j, t2 in enumerate(angles):
                    writer.writerow([repr(float(t1)), repr(float(t2)), repr(float(margins[i, j]))])
        print(f"wrote {args.out}")
    print(f"grid {args.grid}x{args.grid}: max margin {margins.max():.6f}, "
          f"samples below 1e-3: {int((margins < 1e-3).sum())}")
    return 0


def cmd_verify(args) -> int:
    from .verify import run_checks
    failed = run_checks(quick=args.quick)
    print(f"{len(failed)} check(s) failed" if failed else "all checks passed")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geotool",
                                     description="Geometric tool control of a two-link arm.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a scenario file or built-in scenario")
    p.add_argument("scenario", help=f"file path or one of: {', '.join(builtin_names())}")
    p.add_argument("--out", help="export path")
    p.add_argument("--format", choices=("csv", "json"), help="export format (default from extension)")
    p.add_argument("--check", action="store_true", help="exit 1 if the scenario's contract fails")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("christoffel-check", help="closed-form vs finite-difference Christoffel sweep")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_christoffel_check)

    p = sub.add_parser("singularity-map", help="raster of |det Dx| over the chart square")
    p.add_argument("--grid", type=int, default=101)
    p.add_argument("--out", help="CSV output path")
    p.set_defaults(func=cmd_singularity_map)

    p = sub.add_parser("verify", help="run the invariant suite")
    p.add_argument("--quick", action="store_true", help="smaller samples and horizons")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "grid", 2) < 2:
        parser.print_usage(sys.stderr)
        print("geotool: error: --grid must be >= 2", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (GeotoolError, FileNotFoundError, OSError) as exc:
        print(f"geotool: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
