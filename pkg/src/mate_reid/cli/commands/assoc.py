"""`mate assoc stats`."""

from __future__ import annotations

import argparse

from mate_reid.assoc import associate_cycles, association_metrics
from mate_reid.checkpoint import load_checkpoint
from mate_reid.cli.commands.common import add_workers_argument, print_table
from mate_reid.config import settings
from mate_reid.data import load_dataset
from mate_reid.errors import ConfigError
from mate_reid.net import BaselineEnsemble
from mate_reid.trainer import STATS_COLUMNS, association_stats_from_log, read_train_log, write_association_stats


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("assoc", help="Inspect cross-camera association.")
    commands = parser.add_subparsers(dest="assoc_command", required=True, metavar="ACTION")

    stats = commands.add_parser(
        "stats", help="Association precision/recall from a training log, or from a checkpoint at a threshold."
    )
    stats.add_argument("--log", help="Training log CSV written by `mate train --log`.")
    stats.add_argument("--ckpt", help="Checkpoint to associate with (needs --data and --tau).")
    stats.add_argument("--data", help="Dataset whose training split is associated.")
    stats.add_argument("--tau", type=float, help="Association threshold.")
    stats.add_argument("--cycle-length", type=int, default=2, help="Cameras per association cycle. Defaults to 2.")
    stats.add_argument("--out", help="Optional CSV file, one row per association.")
    add_workers_argument(stats)
    stats.set_defaults(handler=run_stats)


def run_stats(args: argparse.Namespace) -> None:
    if args.log:
        rows = association_stats_from_log(read_train_log(args.log))
        title = f"Association per round, {args.log}"
    elif args.ckpt and args.data and args.tau is not None:
        model, mode = load_checkpoint(args.ckpt)
        if isinstance(model, BaselineEnsemble):
            raise ConfigError(f"{mode.value} checkpoints have no cross-camera heads to associate with")
        if not 0.0 <= args.tau <= 1.0:
            raise ConfigError(f"--tau must lie in [0, 1], got {args.tau}")
        dataset = load_dataset(args.data)
        workers = args.workers if args.workers is not None else settings.workers
        pairs, _ = associate_cycles(model, dataset, args.cycle_length, args.tau, max_workers=workers)
        report = association_metrics(pairs, dataset)
        rows = [
            {
                "round": None,
                "tau": args.tau,
                "predicted_pairs": report.predicted_pairs,
                "correct_pairs": report.correct_pairs,
                "ground_truth_pairs": report.ground_truth_pairs,
                "precision": report.precision,
                "recall": report.recall,
            }
        ]
        title = f"Association at tau={args.tau}, {args.ckpt}"
    else:
        raise ConfigError("assoc stats needs --log, or --ckpt with --data and --tau")

    print_table(title, STATS_COLUMNS, rows)
    if args.out:
        write_association_stats(rows, args.out)
