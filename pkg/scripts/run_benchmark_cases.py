"""Run the named desk benchmark cases and print one table per case."""

from __future__ import annotations

import argparse
import logging
from typing import Iterable, Sequence

from mate_reid.cli.commands.common import console, print_table
from mate_reid.config import ExperimentSpec, SynthConfig
from mate_reid.experiments import ResultTable, run_ablation, run_benchmark, run_scope_experiment
from mate_reid.schemas import TrainMode

CASES: dict[str, ExperimentSpec] = {
    "benchmark": ExperimentSpec(
        dataset=SynthConfig(),
        modes=(TrainMode.MCST, TrainMode.EPCS, TrainMode.PCMT, TrainMode.MATE),
        seeds=(0, 1, 2),
        output_dir="runs/benchmark",
    ),
    "ablation": ExperimentSpec(dataset=SynthConfig(), seeds=(0, 1, 2), output_dir="runs/ablation"),
    "scope": ExperimentSpec(dataset=SynthConfig(), seeds=(0,), output_dir="runs/scope"),
    "low-overlap": ExperimentSpec(
        dataset=SynthConfig(reappear_fraction=0.4),
        modes=(TrainMode.PCMT, TrainMode.MATE),
        seeds=(0,),
        output_dir="runs/low-overlap",
    ),
}


def show(case_id: str, table: ResultTable) -> None:
    console.rule(f"[bold blue]{case_id}")
    print_table(case_id, table.columns, table.rows)


def run_case(case_id: str, spec: ExperimentSpec) -> None:
    if case_id == "ablation":
        table = run_ablation(spec)
    elif case_id == "scope":
        table = run_scope_experiment(spec)
    else:
        table = run_benchmark(spec)
    show(case_id, table)


def main(cases: Iterable[str] | None = None) -> None:
    target_cases = cases or CASES.keys()
    for case_id in target_cases:
        run_case(case_id, CASES[case_id])


def parse_args(argv: Sequence[str] | None = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="Run the desk benchmark cases and print their tables.")
    parser.add_argument("cases", nargs="*", help=f"Cases to run ({', '.join(CASES)}). Defaults to all.")
    args = parser.parse_args(argv)
    unknown = [case for case in args.cases if case not in CASES]
    if unknown:
        parser.error(f"unknown case(s): {', '.join(unknown)}")
    return args


if __name__ == "__main__":
    logging.basicConfig(level=logging.WARNING, format="%(asctime)s - %(name)s - %(levelname)s - %(message)s")
    main(parse_args().cases)
