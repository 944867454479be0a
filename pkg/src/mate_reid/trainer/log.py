"""TrainLog persistence as CSV, one row per record."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Mapping, Optional

from mate_reid.errors import DataError
from mate_reid.schemas import LogRecord, TrainLog, TrainMode

COLUMNS = (
    "mode",
    "seed",
    "member",
    "kind",
    "round",
    "epoch",
    "tick",
    "tau",
    "loss_total",
    "loss_mt",
    "loss_ml",
    "batches",
    "predicted_pairs",
    "correct_pairs",
    "ground_truth_pairs",
    "precision",
    "recall",
)
STATS_COLUMNS = ("round", "tau", "predicted_pairs", "correct_pairs", "ground_truth_pairs", "precision", "recall")
_INT_FIELDS = {"member", "round", "epoch", "tick", "batches", "predicted_pairs", "correct_pairs", "ground_truth_pairs"}
_FLOAT_FIELDS = {"tau", "loss_total", "loss_mt", "loss_ml", "precision", "recall"}


def _cell(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def write_train_log(log: TrainLog, path: str | Path) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(COLUMNS)
        for record in log.records:
            row = {"mode": log.mode.value, "seed": log.seed}
            writer.writerow(
                [_cell(row[column]) if column in row else _cell(getattr(record, column)) for column in COLUMNS]
            )
    return target


def _parse(column: str, value: str, where: str) -> Optional[int | float | str]:
    if value == "":
        return None
    try:
        if column in _INT_FIELDS:
            return int(value)
        if column in _FLOAT_FIELDS:
            return float(value)
    except ValueError as exc:
        raise DataError(f"{where}: column {column} has invalid value {value!r}") from exc
    return value


def read_train_log(path: str | Path) -> TrainLog:
    source = Path(path)
    try:
        with source.open("r", encoding="utf-8", newline="") as handle:
            rows = list(csv.DictReader(handle))
    except OSError as exc:
        raise DataError(f"cannot read training log {source}: {exc}") from exc
    if not rows:
        raise DataError(f"{source}: training log has no records")
    missing = [column for column in COLUMNS if column not in rows[0]]
    if missing:
        raise DataError(f"{source}: training log is missing columns {missing}")

    first = rows[0]
    try:
        log = TrainLog(seed=int(first["seed"]), mode=TrainMode(first["mode"]))
    except ValueError as exc:
        raise DataError(f"{source}: invalid mode/seed in training log: {exc}") from exc
    for line_no, row in enumerate(rows, start=2):
        where = f"{source}:{line_no}"
        values = {column: _parse(column, row[column], where) for column in COLUMNS if column not in ("mode", "seed")}
        if values["kind"] not in ("epoch", "association"):
            raise DataError(f"{where}: unknown record kind {values['kind']!r}")
        log.records.append(LogRecord(**values))
    return log


def association_stats_from_log(log: TrainLog) -> list[dict[str, Optional[float | int]]]:
    """Per-round association statistics recorded during training."""
    return [{column: getattr(record, column) for column in STATS_COLUMNS} for record in log.associations()]


def write_association_stats(rows: Iterable[Mapping[str, object]], path: str | Path) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(STATS_COLUMNS)
        for row in rows:
            writer.writerow([_cell(row.get(column)) for column in STATS_COLUMNS])
    return target
