"""`mate train`."""

from __future__ import annotations

import argparse
from typing import Any

from mate_reid.checkpoint import save_checkpoint
from mate_reid.cli.commands.common import add_workers_argument, console
from mate_reid.config import TrainConfig, load_train_config, settings
from mate_reid.data import load_dataset
from mate_reid.schemas import TrainMode
from mate_reid.trainer import train, write_train_log

MOMENTUM_FLAG_VALUE = 0.9


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("train", help="Train a model on an ICS dataset.")
    parser.add_argument("--data", required=True, help="JSON-lines dataset.")
    parser.add_argument("--config", help="TrainConfig overrides (JSON) on top of the selected profile.")
    parser.add_argument("--mode", choices=[mode.value for mode in TrainMode], help="Training mode. Defaults to the config's.")
    parser.add_argument("--seed", type=int, help="Override the training seed.")
    parser.add_argument(
        "--momentum",
        action="store_const",
        const=MOMENTUM_FLAG_VALUE,
        default=None,
        help=f"Use SGD with momentum {MOMENTUM_FLAG_VALUE} instead of plain SGD.",
    )
    add_workers_argument(parser)
    parser.add_argument("--out", required=True, help="Checkpoint file to write.")
    parser.add_argument("--log", help="Training log CSV to write.")
    parser.set_defaults(handler=run_train)


def resolve_train_config(args: argparse.Namespace) -> TrainConfig:
    cfg = load_train_config(args.config, args.profile)
    changes: dict[str, Any] = {}
    if args.mode:
        changes["mode"] = args.mode
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.momentum is not None:
        changes["optimizer"] = {"momentum": args.momentum}
    workers = args.workers if args.workers is not None else settings.workers
    if workers != cfg.association_workers:
        changes["association_workers"] = workers
    return cfg.updated(**changes) if changes else cfg


def run_train(args: argparse.Namespace) -> None:
    cfg = resolve_train_config(args)
    dataset = load_dataset(args.data)
    model, log = train(dataset, cfg)
    save_checkpoint(model, cfg.mode, args.out)
    if args.log:
        write_train_log(log, args.log)
    epochs = log.epochs()
    final_loss = epochs[-1].loss_total if epochs else float("nan")
    console.print(
        f"[green]Trained[/green] {cfg.mode.label} in {log.elapsed_seconds:.1f}s "
        f"({len(epochs)} epochs, final loss {final_loss:.4f}) -> {args.out}"
    )
