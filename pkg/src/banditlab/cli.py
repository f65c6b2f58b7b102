"""Command line entry point: ``banditlab run`` and ``banditlab verify``."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, load_config


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="banditlab", description="Linear bandit design-matrix experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the experiment described by a config file")
    run.add_argument("config", help="flat key = value config file")
    run.add_argument("--out", help="output directory (default: output.dir from the config)")
    run.add_argument("--workers", type=int, help="worker processes (default: available CPUs)")
    run.add_argument("--seed", type=int, help="master seed; overrides BANDITLAB_SEED and the config")
    run.add_argument("--format", choices=("csv", "csv+svg"), help="output formats")

    ver = sub.add_parser("verify", help="run acceptance checks")
    ver.add_argument("suite", nargs="?", default="all",
                     help="all, growth, theory, oracles, alb, clustering, closed_form, determinism, or 1-9")
    ver.add_argument("--workers", type=int, help="worker processes")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    if args.workers is not None and args.workers < 1:
        print("error: --workers must be at least 1", file=sys.stderr)
        return 2
    if args.command == "run":
        from .harness import run_experiment

        try:
            cfg = load_config(args.config, seed=args.seed)
            paths = run_experiment(cfg, args.out, workers=args.workers, fmt=args.format)
        except (ConfigError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        for path in paths:
            print(path)
        return 0

    from .verify import resolve_suite, run_checks

    try:
        keys = resolve_suite(args.suite)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    results = run_checks(keys, workers=args.workers)
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
