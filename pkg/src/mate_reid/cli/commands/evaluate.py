"""`mate eval`."""

from __future__ import annotations

import argparse

from mate_reid.checkpoint import load_checkpoint
from mate_reid.cli.commands.common import add_workers_argument, print_table
from mate_reid.config import settings
from mate_reid.data import load_dataset
from mate_reid.evalkit import dump_embeddings, evaluate, extract_features, write_metrics


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("eval", help="Evaluate a checkpoint on the query/gallery split.")
    parser.add_argument("--ckpt", required=True, help="Checkpoint written by `mate train`.")
    parser.add_argument("--data", required=True, help="JSON-lines dataset with a test split.")
    parser.add_argument("--out", required=True, help="Metrics JSON ({R1, R10, R20, mAP}).")
    parser.add_argument("--embeddings", help="Also dump query+gallery features to this CSV.")
    parser.add_argument("--normalize", action="store_true", help="L2-normalise features before ranking.")
    add_workers_argument(parser)
    parser.set_defaults(handler=run_eval)


def run_eval(args: argparse.Namespace) -> None:
    model, mode = load_checkpoint(args.ckpt)
    dataset = load_dataset(args.data)
    workers = args.workers if args.workers is not None else settings.workers
    result = evaluate(model, dataset, normalize=args.normalize, max_workers=workers)
    write_metrics(result, args.out)
    if args.embeddings:
        dump_embeddings(
            extract_features(model, (*dataset.query, *dataset.gallery), normalize=args.normalize), args.embeddings
        )
    print_table(
        f"{mode.label} on {args.data}",
        ("method", "R1", "R10", "R20", "mAP", "queries"),
        [{"method": mode.label, **result.summary(), "queries": result.query_count}],
    )
