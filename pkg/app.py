#!/usr/bin/env python3
# rcabench: batch experiments on reversible cellular automata

import argparse
import logging
import sys
from typing import Optional, Sequence

from config import CAP_ENV_VAR, DEFAULT_WORKERS
from errors import BenchException
from record_manager import RecordManager

# Import routers
from routers import rules as rules_router
from routers import run as run_router
from routers import verify as verify_router

ROUTERS = [run_router, verify_router, rules_router]


def common_options() -> argparse.ArgumentParser:
    """Flags shared by every subcommand"""
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--seed", type=int, default=None, help="seed for sampling (overrides the config)")
    parent.add_argument("--workers", type=int, default=DEFAULT_WORKERS, help="threads for exact sweeps")
    parent.add_argument("--cap", type=int, default=None, help=f"enumeration cap (default from ${CAP_ENV_VAR})")
    parent.add_argument("--out", default=None, help="write records here instead of stdout")
    parent.add_argument("-v", "--verbose", action="count", default=0, help="-v for info, -vv for debug")
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rcabench",
        description="Exact and sampled experiments on reversible cellular automata",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    parent = common_options()
    for router in ROUTERS:
        router.register(subparsers, parent)
    return parser


def configure_logging(verbose: int) -> None:
    level = logging.WARNING if verbose == 0 else logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)

    # Set record manager for every command
    manager = RecordManager()
    for router in ROUTERS:
        router.set_record_manager(manager)

    try:
        return args.handler(args)
    except BenchException as e:
        print(f"rcabench: error: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
