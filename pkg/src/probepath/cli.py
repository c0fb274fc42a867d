"""Command line: ``plan``, ``run`` and ``bench``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .experiment import (
    Condition,
    ScenarioError,
    emit_results,
    load_scenario,
    load_suite,
    run_benchmark,
    run_once,
)
from .geometry import bezier_sample_uniform
from .perception import TargetNotFound, approach_point, select_target
from .planner import PlanningError, plan_path

EXIT_PLANNING = 1
EXIT_BAD_INPUT = 2

_CONDITIONS = {"with": Condition.WITH_PLANNING, "without": Condition.WITHOUT_PLANNING}


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_plan(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    truth = [(m.id, m.true_pose) for m in scenario.markers_m()]
    try:
        goal = approach_point(select_target(truth, scenario.desired_marker_id), scenario.standoff)
        result = plan_path(scenario.source_m(), goal, scenario.obstacles_m(), scenario.planner)
    except (PlanningError, TargetNotFound) as exc:
        print(f"planning failed: {exc}", file=sys.stderr)
        return EXIT_PLANNING
    pts = bezier_sample_uniform(result.curve, args.samples or scenario.planner.n_check)
    lines = ["x,y,z"] + [",".join(repr(float(c)) for c in p) for p in pts]
    _write("\n".join(lines) + "\n", args.out)
    logging.info("planned in %d iterations, clearance %.4f m", result.iterations_used,
                 result.min_clearance_achieved)
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    result = run_once(scenario, _CONDITIONS[args.condition], args.rep, seed=args.seed)
    print(json.dumps(result.to_dict()))
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    scenarios = load_suite(args.suite)
    rows = run_benchmark(scenarios, repetitions=args.reps)
    _write(emit_results(rows, args.format), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="probepath", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    plan = sub.add_parser("plan", help="plan a path and write its samples as x,y,z CSV (meters)")
    plan.add_argument("--scenario", required=True)
    plan.add_argument("--out")
    plan.add_argument("--samples", type=int, help="number of curve samples (default: planner n_check)")
    plan.set_defaults(func=cmd_plan)

    run = sub.add_parser("run", help="execute one repetition and print its RunResult as JSON")
    run.add_argument("--scenario", required=True)
    run.add_argument("--condition", choices=sorted(_CONDITIONS), required=True)
    run.add_argument("--seed", type=int, help="overrides the scenario seed")
    run.add_argument("--rep", type=int, default=0, help="repetition index")
    run.set_defaults(func=cmd_run)

    bench = sub.add_parser("bench", help="run the with/without-planning benchmark")
    bench.add_argument("--suite", required=True, help="suite file, scenario file, or directory")
    bench.add_argument("--format", choices=["csv", "table"], default="csv")
    bench.add_argument("--out")
    bench.add_argument("--reps", type=int, help="override every scenario's repetitions")
    bench.set_defaults(func=cmd_bench)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "reps", None) is not None and args.reps < 1:
        print("--reps must be >= 1", file=sys.stderr)
        return EXIT_BAD_INPUT
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
