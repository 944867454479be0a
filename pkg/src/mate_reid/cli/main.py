"""`mate` command-line entry point."""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Sequence

from mate_reid.cli.commands import assoc, data, evaluate, experiments, train
from mate_reid.config import PROFILES, settings
from mate_reid.errors import MateError
from mate_reid.utils import get_logger

logger = get_logger(__name__)

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


def create_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mate",
        description="Intra-camera supervised person re-identification: data, training, association and evaluation.",
    )
    parser.add_argument(
        "--log-level",
        default=settings.log_level,
        choices=LOG_LEVELS,
        help=f"Logging level. Defaults to MATE_LOG_LEVEL or {settings.log_level}.",
    )
    parser.add_argument(
        "--profile",
        default=None,
        choices=tuple(PROFILES),
        help=f"Training constants: 'desk' for fast runs, 'paper' for the full schedule. Defaults to {settings.profile}.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for module in (data, train, evaluate, assoc, experiments):
        module.register(subparsers)
    return parser


def parse_args(argv: Sequence[str] | None = None) -> argparse.Namespace:
    """Parse command line arguments."""
    return create_parser().parse_args(argv)


def main(argv: Sequence[str] | None = None) -> int:
    """Run one command and return its exit code."""
    args = parse_args(argv)

    logging.basicConfig(
        level=getattr(logging, args.log_level.upper(), logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )

    try:
        args.handler(args)
    except MateError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
