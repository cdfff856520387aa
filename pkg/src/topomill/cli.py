"""Command line entry point.

Subcommands mirror the pipeline stages; each one runs the pipeline up to and
including that stage, reusing cached work.  ``report`` renders the results
table of a finished run.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .config import default_config, load_config
from .pipeline import Pipeline, StageError, report

STAGE_COMMANDS = ("simulate", "label", "prep", "persist", "featurize",
                  "evaluate", "run")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="topomill",
        description="Simulate milling vibrations, label stability, and classify "
                    "chatter from topological features.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="YAML experiment config (defaults used when omitted)")
        p.add_argument("--out", required=True, help="output/cache directory")
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--jobs", type=int, default=1, help="parallel workers")

    for name in STAGE_COMMANDS:
        stage_help = ("full pipeline" if name == "run"
                      else f"pipeline through the '{name}' stage")
        add_common(sub.add_parser(name, help=stage_help))

    rep = sub.add_parser("report", help="render the results table of a run")
    rep.add_argument("--out", help="run directory holding results.json")
    rep.add_argument("--results", help="explicit path to results.json")
    rep.add_argument("--format", choices=("markdown", "csv"), default="markdown")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "report":
            source = args.results or args.out
            if not source:
                print("[report] need --out or --results", file=sys.stderr)
                return 2
            path = report(source, fmt=args.format)
            print(f"wrote {path}")
            return 0

        config = load_config(args.config) if args.config else default_config()
        if args.seed is not None:
            config = replace(config, master_seed=args.seed)
        through = "evaluate" if args.command == "run" else args.command
        summary = Pipeline(config, args.out, jobs=args.jobs).run(through=through)
        hits, misses = len(summary.cache_hits), len(summary.cache_misses)
        print(f"completed through '{through}' "
              f"({misses} stage(s) computed, {hits} cached) in {summary.out_dir}")
        if summary.results_path is not None:
            report(summary.results_path, fmt="markdown")
            report(summary.results_path, fmt="csv")
            print(f"results: {summary.results_path}")
        return 0
    except StageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"[config] {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
