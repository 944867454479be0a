"""`mate data gen|cost|transform`."""

from __future__ import annotations

import argparse

from mate_reid.cli.commands.common import console, print_table
from mate_reid.config import SynthConfig, build_model, load_config
from mate_reid.data import annotation_cost, generate_synthetic, ics_transform, load_dataset, save_dataset
from mate_reid.utils import write_json


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("data", help="Generate, transform and cost datasets.")
    commands = parser.add_subparsers(dest="data_command", required=True, metavar="ACTION")

    gen = commands.add_parser("gen", help="Generate a synthetic ICS dataset.")
    gen.add_argument("--config", help="SynthConfig JSON file. Defaults to the built-in benchmark recipe.")
    gen.add_argument("--seed", type=int, help="Override the generator seed.")
    gen.add_argument("--out", required=True, help="Output JSON-lines dataset.")
    gen.set_defaults(handler=run_gen)

    cost = commands.add_parser("cost", help="Leading-term annotation comparison counts.")
    cost.add_argument("--n", type=int, required=True, help="Identities per camera.")
    cost.add_argument("--m", type=int, required=True, help="Number of cameras.")
    cost.add_argument("--out", help="Optional JSON output file.")
    cost.set_defaults(handler=run_cost)

    transform = commands.add_parser("transform", help="Relabel a globally labelled dataset per camera.")
    transform.add_argument("--data", required=True, help="Input dataset (labels are global ids).")
    transform.add_argument("--seed", type=int, default=0, help="Relabelling seed. Defaults to 0.")
    transform.add_argument("--out", required=True, help="Output JSON-lines dataset.")
    transform.set_defaults(handler=run_transform)


def run_gen(args: argparse.Namespace) -> None:
    cfg = load_config(args.config, SynthConfig) if args.config else SynthConfig()
    if args.seed is not None:
        cfg = build_model(SynthConfig, {**cfg.model_dump(), "seed": args.seed}, source="--seed")
    dataset = generate_synthetic(cfg)
    save_dataset(dataset, args.out)
    console.print(
        f"[green]Wrote[/green] {args.out}: M={dataset.M}, N={list(dataset.label_space_sizes)}, "
        f"{len(dataset.train_samples())} train / {len(dataset.query)} query / {len(dataset.gallery)} gallery"
    )


def run_cost(args: argparse.Namespace) -> None:
    estimate = annotation_cost(args.n, args.m)
    rows = [
        {"metric": "intra-camera (ICS)", "comparisons": estimate.intra_total},
        {"metric": "inter-camera, low", "comparisons": estimate.inter_low},
        {"metric": "inter-camera, high", "comparisons": estimate.inter_high},
    ]
    print_table(f"Annotation cost, N={args.n}, M={args.m}", ("metric", "comparisons"), rows)
    if args.out:
        write_json(
            args.out,
            {"intra_total": estimate.intra_total, "inter_low": estimate.inter_low, "inter_high": estimate.inter_high},
        )


def run_transform(args: argparse.Namespace) -> None:
    dataset = ics_transform(load_dataset(args.data, require_contiguous_labels=False), args.seed)
    save_dataset(dataset, args.out)
    console.print(f"[green]Wrote[/green] {args.out}: N={list(dataset.label_space_sizes)}")
