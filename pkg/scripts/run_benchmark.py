"""Run the shipped six-scenario benchmark and print both output formats.

    python scripts/run_benchmark.py [--suite PATH] [--reps N] [--csv OUT]
"""
import argparse
import time
from pathlib import Path

from probepath.experiment import emit_results, load_suite, run_benchmark

DEFAULT_SUITE = Path(__file__).resolve().parents[1] / "scenarios" / "suite_table1.json"


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--suite", default=str(DEFAULT_SUITE))
    p.add_argument("--reps", type=int)
    p.add_argument("--csv", help="also write the CSV here")
    args = p.parse_args()

    start = time.perf_counter()
    rows = run_benchmark(load_suite(args.suite), repetitions=args.reps)
    elapsed = time.perf_counter() - start

    print(emit_results(rows, "table"))
    if args.csv:
        Path(args.csv).write_text(emit_results(rows))
    print(f"{sum(r.n_total for r in rows if r.scenario_name != 'AGGREGATE')} runs in {elapsed:.1f}s")


if __name__ == "__main__":
    main()
