"""Re-run the benchmark under several seeds and check the with/without orderings.

For every seed the whole suite is reseeded (the same override the
APPRUSS_SEED environment variable applies) and each row is checked for:
with-planning success >= 80%, without <= with, and mean time with < without.

    python scripts/seed_sweep.py --seeds 1 2 3 4 5
"""
import argparse
import dataclasses
from pathlib import Path

from probepath.experiment import AGGREGATE, Condition, load_suite, run_benchmark

DEFAULT_SUITE = Path(__file__).resolve().parents[1] / "scenarios" / "suite_table1.json"


def violations(rows):
    by_key = {(r.scenario_name, r.condition): r for r in rows}
    out = []
    for (name, cond), w in by_key.items():
        if cond is not Condition.WITH_PLANNING or name == AGGREGATE:
            continue
        wo = by_key[(name, Condition.WITHOUT_PLANNING)]
        if w.success_rate < 80:
            out.append(f"{name}: with {w.success_rate:.0f}% < 80%")
        if wo.success_rate > w.success_rate:
            out.append(f"{name}: without {wo.success_rate:.0f}% > with {w.success_rate:.0f}%")
        if w.n_success and wo.n_success and w.mean_moving_time >= wo.mean_moving_time:
            out.append(f"{name}: with {w.mean_moving_time:.1f}s >= without {wo.mean_moving_time:.1f}s")
    return out


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--suite", default=str(DEFAULT_SUITE))
    p.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3, 4, 5])
    args = p.parse_args()

    suite = load_suite(args.suite)
    failed = 0
    for seed in args.seeds:
        rows = run_benchmark([dataclasses.replace(s, seed=seed) for s in suite])
        agg = {r.condition: r for r in rows if r.scenario_name == AGGREGATE}
        w, wo = agg[Condition.WITH_PLANNING], agg[Condition.WITHOUT_PLANNING]
        bad = violations(rows)
        failed += bool(bad)
        print(f"seed {seed:>4}: with {w.success_rate:5.1f}% {w.mean_moving_time:5.1f}s | "
              f"without {wo.success_rate:5.1f}% {wo.mean_moving_time:5.1f}s | "
              f"{'ok' if not bad else '; '.join(bad)}")
    raise SystemExit(1 if failed else 0)


if __name__ == "__main__":
    main()
