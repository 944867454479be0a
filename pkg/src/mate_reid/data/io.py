"""JSON-lines dataset files.

Layout: one section per split, in order train, query, gallery. Each section opens
with a header line ``{"M": .., "label_space_sizes": [..], "split": ..}`` followed by
one sample per line ``{"id": .., "camera": .., "label": .., "global_id": .., "x": [..]}``.
Floats are written with ``repr`` precision, so a save/load round trip is exact.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from mate_reid.errors import DataError
from mate_reid.schemas import IcsDataset, Sample
from mate_reid.utils import get_logger

logger = get_logger(__name__)

SPLITS = ("train", "query", "gallery")


class HeaderRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")

    M: int = Field(..., ge=1)
    label_space_sizes: list[int]
    split: Literal["train", "query", "gallery"]


class SampleRecord(BaseModel):
    model_config = ConfigDict(extra="forbid", allow_inf_nan=False)

    id: int
    camera: int = Field(..., ge=1, description="cameras are 1-based")
    label: int
    global_id: Optional[int] = None
    x: list[float]

    def to_sample(self) -> Sample:
        return Sample(id=self.id, x=tuple(self.x), camera=self.camera, label=self.label, global_id=self.global_id)


def _dump(payload: dict) -> str:
    return json.dumps(payload, separators=(",", ":"), allow_nan=False)


def save_dataset(dataset: IcsDataset, path: str | Path) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    sections = {"train": dataset.train_samples(), "query": dataset.query, "gallery": dataset.gallery}
    with target.open("w", encoding="utf-8") as handle:
        for split in SPLITS:
            header = {"M": dataset.M, "label_space_sizes": list(dataset.label_space_sizes), "split": split}
            handle.write(_dump(header) + "\n")
            for sample in sections[split]:
                record = {
                    "id": sample.id,
                    "camera": sample.camera,
                    "label": sample.label,
                    "global_id": sample.global_id,
                    "x": list(sample.x),
                }
                handle.write(_dump(record) + "\n")
    logger.info("wrote dataset to %s", target)
    return target


def load_dataset(path: str | Path, *, require_contiguous_labels: bool = True) -> IcsDataset:
    """Parse and validate a dataset file.

    Globally labelled inputs of ``ics_transform`` pass ``require_contiguous_labels=False``.
    """
    source = Path(path)
    try:
        lines = source.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DataError(f"cannot read dataset {source}: {exc}") from exc

    header: HeaderRecord | None = None
    sections: dict[str, list[Sample]] = {split: [] for split in SPLITS}
    split: str | None = None
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            payload = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"{source}:{line_no}: malformed JSON: {exc.msg}") from exc
        if not isinstance(payload, dict):
            raise DataError(f"{source}:{line_no}: expected a JSON object")

        try:
            if "split" in payload:
                current = HeaderRecord.model_validate(payload)
                if header is not None and (
                    current.M != header.M or current.label_space_sizes != header.label_space_sizes
                ):
                    raise DataError(
                        f"{source}:{line_no}: inconsistent label_space_sizes/M between split headers"
                    )
                header, split = header or current, current.split
                continue
            record = SampleRecord.model_validate(payload)
        except ValidationError as exc:
            first = exc.errors()[0]
            where = ".".join(str(part) for part in first["loc"]) or "<record>"
            raise DataError(f"{source}:{line_no}: invalid record field {where}: {first['msg']}") from exc
        if split is None:
            raise DataError(f"{source}:{line_no}: sample before any split header")
        sections[split].append(record.to_sample())

    if header is None:
        raise DataError(f"{source}: no header line found")
    if len(header.label_space_sizes) != header.M:
        raise DataError(
            f"{source}: inconsistent label_space_sizes: {len(header.label_space_sizes)} sizes for M={header.M}"
        )

    per_camera: list[list[Sample]] = [[] for _ in range(header.M)]
    for sample in sections["train"]:
        if sample.camera > header.M:
            raise DataError(f"{source}: sample {sample.id} has camera {sample.camera} > M={header.M}")
        per_camera[sample.camera - 1].append(sample)

    dataset = IcsDataset(
        per_camera=tuple(tuple(samples) for samples in per_camera),
        label_space_sizes=tuple(header.label_space_sizes),
        query=tuple(sections["query"]),
        gallery=tuple(sections["gallery"]),
    )
    try:
        return dataset.validate(require_contiguous_labels=require_contiguous_labels)
    except DataError as exc:
        raise DataError(f"{source}: {exc}") from exc
