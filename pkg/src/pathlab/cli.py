"""Command-line entry point.

Exit codes: 0 success, 1 validation error, 2 numerical failure, 3 I/O error.
"""
from __future__ import annotations

import argparse
import json
import sys

from .errors import NumericalError, ValidationError
from .experiments import COMMANDS, ExperimentConfig

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pathlab",
                                     description="Time-sliced path integral experiments.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="JSON config file (defaults used when omitted)")
    parser.add_argument("--out", help="output directory (overrides the config)")
    parser.add_argument("--seed", type=int, help="rng seed (overrides the config)")
    parser.add_argument("--threads", type=int, help="BLAS thread count")
    return parser


def _load(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    if args.out is not None:
        cfg = cfg.replace(output_dir=args.out)
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    return cfg


def run(args) -> int:
    try:
        cfg = _load(args)
        result = COMMANDS[args.command](cfg)
        written = result.outputs.commit(cfg.output_dir)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    for path in written:
        print(f"wrote {path}")
    print(json.dumps(result.summary, indent=2, sort_keys=True, default=str))
    if not result.ok:
        print(result.message, file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is not None:
        if args.threads < 1:
            print("validation error: --threads must be positive", file=sys.stderr)
            return EXIT_VALIDATION
        from threadpoolctl import threadpool_limits

        with threadpool_limits(limits=args.threads):
            return run(args)
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
