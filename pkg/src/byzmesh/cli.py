"""Command-line entry point.

    byzmesh run <config.yaml> [--out DIR] [--seeds 1,2,3] [--threads N]
    byzmesh check <suite> [--out DIR]
    byzmesh bench

Exit codes: 0 success, 1 runtime failure (the failing run is named),
2 configuration error (the offending field is named).
"""
from __future__ import annotations

import argparse
import sys

from .checks import SUITES, run_checks
from .experiment import ConfigError, load_config, run_experiment
from .trainer import TrainerError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="byzmesh", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment grid from a config file")
    p_run.add_argument("config", help="YAML experiment config")
    p_run.add_argument("--out", help="output directory (overrides config)")
    p_run.add_argument("--seeds", help="comma-separated seed list (overrides config)")
    p_run.add_argument("--threads", type=int, help="parallel runs (never changes results)")

    p_check = sub.add_parser("check", help="run a verification suite")
    p_check.add_argument("suite", choices=SUITES)
    p_check.add_argument("--out", default="reports", help="report directory")

    p_bench = sub.add_parser("bench", help="compare compiled and pure kernels")
    p_bench.add_argument("--repeats", type=int, default=2000)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "run":
        overrides = {}
        if args.out:
            overrides["out"] = args.out
        if args.seeds:
            overrides["seeds"] = args.seeds
        if args.threads:
            overrides["threads"] = args.threads
        try:
            cfg = load_config(args.config, overrides)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
        try:
            summary = run_experiment(cfg)
        except TrainerError as exc:
            print(f"runtime error: {exc}", file=sys.stderr)
            return 1
        print(f"wrote {len(list(cfg.runs()))} traces and summary to {cfg.out_dir}")
        for row in summary["rows"]:
            acc = "-" if row["accuracy"] is None else f"{row['accuracy']:.4f}"
            print(f"  {row['aggregator']:<16} {row['attack']:<16} acc={acc} dm={row['dm']:.3e}")
        return 0

    if args.command == "check":
        report = run_checks(args.suite, args.out)
        status = "PASS" if report["passed"] else "FAIL"
        print(f"{args.suite}: {status} (report in {args.out}/{args.suite}.json)")
        return 0 if report["passed"] else 1

    if args.command == "bench":
        from .bench import print_benchmark, run_benchmark

        print_benchmark(run_benchmark(args.repeats))
        return 0

    return 2


if __name__ == "__main__":
    sys.exit(main())
