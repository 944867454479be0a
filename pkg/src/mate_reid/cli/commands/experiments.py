"""`mate bench|scope|sweep`."""

from __future__ import annotations

import argparse

from mate_reid.cli.commands.common import print_table
from mate_reid.config import ExperimentSpec, build_model, load_config, settings
from mate_reid.experiments import (
    SCOPE_CYCLE_LENGTHS,
    SENSITIVITY_PARAMETERS,
    run_ablation,
    run_benchmark,
    run_scope_experiment,
    run_sensitivity,
)


def register(subparsers: argparse._SubParsersAction) -> None:
    bench = subparsers.add_parser("bench", help="Train and evaluate every mode; write comparison tables.")
    _add_spec_arguments(bench)
    bench.add_argument("--ablation", action="store_true", help="Compare PCMT, MATE-NO-CT and MATE instead.")
    bench.set_defaults(handler=run_bench)

    scope = subparsers.add_parser("scope", help="Compare association cycle lengths.")
    _add_spec_arguments(scope)
    scope.add_argument(
        "--cycles", type=int, nargs="+", default=list(SCOPE_CYCLE_LENGTHS), help="Cycle lengths. Defaults to 2 3 4."
    )
    scope.set_defaults(handler=run_scope)

    sweep = subparsers.add_parser("sweep", help="Hyper-parameter sensitivity of the full model.")
    _add_spec_arguments(sweep)
    sweep.add_argument("--param", required=True, choices=SENSITIVITY_PARAMETERS, help="Parameter to vary.")
    sweep.add_argument("--values", type=float, nargs="+", required=True, help="Values to try.")
    sweep.set_defaults(handler=run_sweep)


def _add_spec_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--spec", help="ExperimentSpec JSON file. Defaults to the built-in benchmark.")
    parser.add_argument("--out", help="Output directory. Defaults to the experiment's output_dir.")
    parser.add_argument("--seeds", type=int, nargs="+", help="Override the experiment's seeds.")
    parser.add_argument("--workers", type=int, default=None, help="Concurrent runs. Defaults to the experiment's workers or MATE_WORKERS.")


def load_spec(args: argparse.Namespace) -> ExperimentSpec:
    spec = load_config(args.spec, ExperimentSpec) if args.spec else ExperimentSpec(workers=settings.workers)
    changes = {}
    if args.seeds:
        changes["seeds"] = args.seeds
    if args.workers is not None:
        changes["workers"] = args.workers
    if changes:
        spec = build_model(ExperimentSpec, {**spec.model_dump(), **changes}, source="command line")
    return spec


def _profile(args: argparse.Namespace, spec: ExperimentSpec) -> str | None:
    return args.profile or spec.profile


def run_bench(args: argparse.Namespace) -> None:
    spec = load_spec(args)
    runner = run_ablation if args.ablation else run_benchmark
    table = runner(spec, output_dir=args.out, profile=_profile(args, spec))
    print_table("Ablation" if args.ablation else "Benchmark", table.columns, table.rows)


def run_scope(args: argparse.Namespace) -> None:
    spec = load_spec(args)
    table = run_scope_experiment(spec, args.cycles, output_dir=args.out, profile=_profile(args, spec))
    print_table("Associative scope", table.columns, table.rows)


def run_sweep(args: argparse.Namespace) -> None:
    spec = load_spec(args)
    table = run_sensitivity(spec, args.param, args.values, output_dir=args.out, profile=_profile(args, spec))
    print_table(f"Sensitivity to {args.param}", table.columns, table.rows)
