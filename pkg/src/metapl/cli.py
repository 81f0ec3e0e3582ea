"""Command-line entry points: run, grid, verify, report.

Exit codes: 0 success, 1 configuration/usage error, 2 numerical abort.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .harness import (
    ConfigError,
    decision_grid,
    parse_config,
    report,
    run_experiment,
    verify_suite,
)
from .model import load_params
from .trainers import NumericalError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="metapl")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a config file")
    p_run.add_argument("--config", required=True, help="path to the config file")
    p_run.add_argument("--seeds", type=int, default=None, help="override n_seeds")
    p_run.add_argument("--out", default=None, help="override output_dir")

    p_grid = sub.add_parser("grid", help="write a decision grid for a checkpoint")
    p_grid.add_argument("--checkpoint", required=True)
    p_grid.add_argument("--bounds", required=True, help="x_min,x_max,y_min,y_max")
    p_grid.add_argument("--res", type=int, required=True)
    p_grid.add_argument("--out", default="grid.csv")

    sub.add_parser("verify", help="run the gradient oracle suite")

    p_report = sub.add_parser("report", help="print the summary of a finished run")
    p_report.add_argument("--dir", required=True)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            config = parse_config(args.config)
            if args.seeds is not None:
                config = replace(config, n_seeds=args.seeds)
            if args.out is not None:
                config = replace(config, output_dir=args.out)
            summary = run_experiment(config)
            print(
                f"{summary['method']}: accuracy {summary['mean_acc']:.4f} "
                f"+/- {summary['std_acc']:.4f}, success rate {summary['success_rate']:.4f} "
                f"({summary['elapsed_s']:.1f}s)"
            )
            return 0
        if args.command == "grid":
            try:
                bounds = tuple(float(v) for v in args.bounds.split(","))
            except ValueError:
                raise ConfigError(f"bad bounds {args.bounds!r}, need x_min,x_max,y_min,y_max")
            if len(bounds) != 4:
                raise ConfigError(f"bounds needs 4 values, got {len(bounds)}")
            params = load_params(args.checkpoint)
            decision_grid(params, bounds, args.res, args.out)
            print(f"wrote {args.res * args.res} grid points to {args.out}")
            return 0
        if args.command == "verify":
            return 0 if verify_suite() else 1
        if args.command == "report":
            report(args.dir)
            return 0
        raise ConfigError(f"unknown command {args.command!r}")
    except NumericalError as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, FileNotFoundError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
