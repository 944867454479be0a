"""Command modules; each exposes ``register(subparsers)``."""

from mate_reid.cli.commands import assoc, data, evaluate, experiments, train

__all__ = ["assoc", "data", "evaluate", "experiments", "train"]
