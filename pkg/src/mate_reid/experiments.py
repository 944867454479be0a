"""Experiment orchestration: benchmark tables, associative scope and sensitivity sweeps.

Every run trains one (mode, seed) cell on a shared dataset and evaluates it on the
dataset's query/gallery split. Cells are independent and may run on a thread
pool; results are always collected in submission order.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import numpy as np

from mate_reid.config import ExperimentSpec, TrainConfig, train_config
from mate_reid.data import generate_synthetic, load_dataset
from mate_reid.errors import ConfigError, DataError, MateError, NumericError
from mate_reid.evalkit import evaluate
from mate_reid.schemas import EvalResult, IcsDataset, TrainLog, TrainMode
from mate_reid.trainer import train
from mate_reid.utils import get_logger, write_json

logger = get_logger(__name__)

METRIC_COLUMNS = ("R1", "R10", "R20", "mAP")
ABLATION_MODES = (TrainMode.PCMT, TrainMode.MATE_NO_CT, TrainMode.MATE)
SCOPE_CYCLE_LENGTHS = (2, 3, 4)
SENSITIVITY_PARAMETERS = ("lambda", "tau_lower", "tau_upper")


@dataclass(slots=True)
class RunResult:
    mode: TrainMode
    seed: int
    result: EvalResult
    log: TrainLog

    def final_association(self) -> dict[str, Optional[float]]:
        records = self.log.associations()
        if not records:
            return {"precision": None, "recall": None, "predicted_pairs": None}
        last = records[-1]
        return {"precision": last.precision, "recall": last.recall, "predicted_pairs": last.predicted_pairs}


@dataclass(slots=True)
class ResultTable:
    """Rows of named columns, written as CSV and JSON."""

    columns: tuple[str, ...]
    rows: list[dict[str, Any]] = field(default_factory=list)

    def column(self, name: str) -> list[Any]:
        return [row[name] for row in self.rows]

    def row_by(self, key: str, value: Any) -> dict[str, Any]:
        for row in self.rows:
            if row[key] == value:
                return row
        raise KeyError(f"no row with {key}={value!r}")

    def write_csv(self, path: str | Path) -> Path:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        with target.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(self.columns)
            for row in self.rows:
                writer.writerow(["" if row[c] is None else (repr(row[c]) if isinstance(row[c], float) else row[c]) for c in self.columns])
        return target

    def write_json(self, path: str | Path, **extra: Any) -> Path:
        return write_json(path, {"columns": list(self.columns), "rows": self.rows, **extra})


def resolve_dataset(spec: ExperimentSpec) -> IcsDataset:
    if spec.dataset_path is not None:
        return load_dataset(spec.dataset_path)
    return generate_synthetic(spec.synth_config())


def base_train_config(spec: ExperimentSpec, profile: Optional[str] = None) -> TrainConfig:
    return train_config(profile or spec.profile, spec.train)


def run_cell(dataset: IcsDataset, cfg: TrainConfig) -> RunResult:
    """Train and evaluate one configuration, tagging any failure with its mode and seed."""
    context = f"{cfg.mode.label} (seed {cfg.seed})"
    try:
        model, log = train(dataset, cfg)
        result = evaluate(model, dataset)
    except NumericError as exc:
        raise NumericError(f"{context}: {exc}", layer=exc.layer, coordinates=exc.coordinates) from exc
    except MateError as exc:
        raise type(exc)(f"{context}: {exc}") from exc
    return RunResult(mode=cfg.mode, seed=cfg.seed, result=result, log=log)


def run_cells(dataset: IcsDataset, configs: Sequence[TrainConfig], workers: int = 1) -> list[RunResult]:
    if workers > 1 and len(configs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(lambda cfg: run_cell(dataset, cfg), configs))
    return [run_cell(dataset, cfg) for cfg in configs]


def _mean_metrics(runs: Sequence[RunResult]) -> dict[str, float]:
    return {name: float(np.mean([run.result.summary()[name] for run in runs])) for name in METRIC_COLUMNS}


def _grouped(
    runs: Sequence[RunResult], keys: Sequence[Any], key_of: Callable[[int], Any]
) -> list[tuple[Any, list[RunResult]]]:
    groups: dict[Any, list[RunResult]] = {key: [] for key in keys}
    for index, run in enumerate(runs):
        groups[key_of(index)].append(run)
    return list(groups.items())


def _per_seed_rows(runs: Sequence[RunResult], label: Callable[[RunResult], Any], key: str) -> list[dict[str, Any]]:
    return [{key: label(run), "seed": run.seed, **run.result.summary()} for run in runs]


def run_benchmark(
    spec: ExperimentSpec,
    *,
    modes: Optional[Sequence[TrainMode]] = None,
    output_dir: Optional[str | Path] = None,
    profile: Optional[str] = None,
    name: str = "benchmark",
) -> ResultTable:
    """Train every mode for every seed on one dataset; rows hold the seed-mean metrics."""
    modes = tuple(modes or spec.modes)
    dataset = resolve_dataset(spec)
    base = base_train_config(spec, profile)
    configs = [base.updated(mode=mode.value, seed=seed) for mode in modes for seed in spec.seeds]
    logger.info("%s: %d mode(s) x %d seed(s)", name, len(modes), len(spec.seeds))
    runs = run_cells(dataset, configs, spec.workers)

    table = ResultTable(columns=("method", *METRIC_COLUMNS, "seeds"))
    for mode, group in _grouped(runs, modes, lambda i: modes[i // len(spec.seeds)]):
        table.rows.append({"method": mode.label, **_mean_metrics(group), "seeds": len(group)})

    out = Path(output_dir or spec.output_dir)
    table.write_csv(out / f"{name}.csv")
    table.write_json(out / f"{name}.json", runs=_per_seed_rows(runs, lambda run: run.mode.label, "method"))
    return table


def run_ablation(spec: ExperimentSpec, **kwargs: Any) -> ResultTable:
    """PCMT, association without curriculum, full model."""
    return run_benchmark(spec, modes=ABLATION_MODES, name="ablation", **kwargs)


def run_scope_experiment(
    spec: ExperimentSpec,
    cycle_lengths: Sequence[int] = SCOPE_CYCLE_LENGTHS,
    *,
    output_dir: Optional[str | Path] = None,
    profile: Optional[str] = None,
) -> ResultTable:
    """Train the full model with 2-, 3- and 4-camera association cycles."""
    cycle_lengths = tuple(cycle_lengths)
    if not cycle_lengths:
        raise ConfigError("no cycle lengths requested")
    dataset = resolve_dataset(spec)
    if dataset.M < max(cycle_lengths):
        raise ConfigError(
            f"cycle length {max(cycle_lengths)} needs at least {max(cycle_lengths)} cameras, dataset has {dataset.M}"
        )
    if not dataset.has_ground_truth():
        raise DataError("associative scope needs global ids to score association precision")
    base = base_train_config(spec, profile)
    configs = [
        base.updated(mode=TrainMode.MATE.value, cycle_length=c, seed=seed) for c in cycle_lengths for seed in spec.seeds
    ]
    runs = run_cells(dataset, configs, spec.workers)

    table = ResultTable(columns=("cycle_length", "precision", "recall", "predicted_pairs", "R1", "mAP", "seeds"))
    for c, group in _grouped(runs, cycle_lengths, lambda i: cycle_lengths[i // len(spec.seeds)]):
        finals = [run.final_association() for run in group]
        metrics = _mean_metrics(group)
        table.rows.append(
            {
                "cycle_length": c,
                "precision": float(np.mean([f["precision"] for f in finals])),
                "recall": float(np.mean([f["recall"] for f in finals])),
                "predicted_pairs": float(np.mean([f["predicted_pairs"] for f in finals])),
                "R1": metrics["R1"],
                "mAP": metrics["mAP"],
                "seeds": len(group),
            }
        )
    out = Path(output_dir or spec.output_dir)
    table.write_csv(out / "scope.csv")
    table.write_json(out / "scope.json")
    return table


def run_sensitivity(
    spec: ExperimentSpec,
    parameter: str,
    values: Sequence[float],
    *,
    output_dir: Optional[str | Path] = None,
    profile: Optional[str] = None,
) -> ResultTable:
    """Retrain the full model for each value of one hyper-parameter."""
    if parameter not in SENSITIVITY_PARAMETERS:
        raise ConfigError(f"unknown sweep parameter {parameter!r}; expected one of {', '.join(SENSITIVITY_PARAMETERS)}")
    values = tuple(float(v) for v in values)
    if not values:
        raise ConfigError("no sweep values given")
    dataset = resolve_dataset(spec)
    base = base_train_config(spec, profile)
    configs = [
        base.updated(mode=TrainMode.MATE.value, seed=seed, **{parameter: value}) for value in values for seed in spec.seeds
    ]
    runs = run_cells(dataset, configs, spec.workers)

    table = ResultTable(columns=(parameter, *METRIC_COLUMNS, "seeds"))
    for value, group in _grouped(runs, values, lambda i: values[i // len(spec.seeds)]):
        table.rows.append({parameter: value, **_mean_metrics(group), "seeds": len(group)})
    out = Path(output_dir or spec.output_dir)
    table.write_csv(out / f"sweep-{parameter}.csv")
    table.write_json(out / f"sweep-{parameter}.json")
    return table
