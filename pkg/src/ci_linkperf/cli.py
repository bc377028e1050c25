"""Command line entry point: ``ci-linkperf run`` and ``ci-linkperf validate``."""
from __future__ import annotations

import argparse
import sys

from .config import FIGURES, METHODS, load_experiment, validate_config
from .experiments import run_experiment
from .system import ConfigError

PAPER_SCALE_TRIALS = 1_000_000


def _methods(text):
    if text == "all":
        return METHODS
    items = tuple(m.strip() for m in text.split(",") if m.strip())
    bad = [m for m in items if m not in METHODS]
    if bad or not items:
        raise argparse.ArgumentTypeError(f"methods must be 'all' or a comma list of {METHODS}")
    return items


def _trials(text):
    value = float(text)
    if value != int(value) or value < 1:
        raise argparse.ArgumentTypeError("trials must be a positive integer")
    return int(value)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ci-linkperf", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an experiment and write CSV files")
    r.add_argument("--config", required=True, help="TOML experiment file")
    r.add_argument("--figure", choices=FIGURES, help="override the figure in the file")
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--seed", type=int)
    r.add_argument("--trials", type=_trials, help="Monte Carlo trials (default 1e5)")
    r.add_argument("--methods", type=_methods, help="'all' or comma list")
    r.add_argument("--paper-scale", action="store_true",
                   help=f"use {PAPER_SCALE_TRIALS:.0e} Monte Carlo trials")
    v = sub.add_parser("validate", help="check a config file without running it")
    v.add_argument("config", nargs="?")
    v.add_argument("--config", dest="config_opt")
    return parser


def _validate(args) -> int:
    path = args.config_opt or args.config
    if not path:
        print("error: no config file given", file=sys.stderr)
        return 2
    try:
        problems = validate_config(path)
    except OSError as exc:
        print(f"error: cannot read {path}: {exc}", file=sys.stderr)
        return 2
    for p in problems:
        print(p)
    return 1 if problems else 0


def _run(args) -> int:
    trials = PAPER_SCALE_TRIALS if args.paper_scale else args.trials
    try:
        spec = load_experiment(args.config, figure=args.figure, seed=args.seed,
                               trials=trials, methods=args.methods)
        files = run_experiment(spec, args.out)
    except ConfigError as exc:
        for p in exc.problems:
            print(f"config error: {p}", file=sys.stderr)
        return 2
    except (OSError, ValueError, RuntimeError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for f in files:
        print(f)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "validate":
        return _validate(args)
    return _run(args)


if __name__ == "__main__":
    sys.exit(main())
