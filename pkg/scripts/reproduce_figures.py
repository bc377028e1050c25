"""Run every experiment file in configs/ and write the tables to results/<name>/.

Usage: python scripts/reproduce_figures.py [--trials N] [--out DIR] [names ...]
"""
import argparse
import sys
import time
from pathlib import Path

from ci_linkperf.config import load_experiment
from ci_linkperf.experiments import run_experiment

ROOT = Path(__file__).resolve().parent.parent


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("names", nargs="*", help="config stems (default: all)")
    parser.add_argument("--trials", type=int, help="override Monte Carlo trials")
    parser.add_argument("--out", default=str(ROOT / "results"))
    args = parser.parse_args(argv)
    paths = sorted((ROOT / "configs").glob("*.toml"))
    if args.names:
        paths = [p for p in paths if p.stem in args.names]
    for path in paths:
        start = time.perf_counter()
        spec = load_experiment(path, trials=args.trials)
        files = run_experiment(spec, Path(args.out) / path.stem)
        print(f"{path.stem}: {len(files)} files in {time.perf_counter() - start:.1f} s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
