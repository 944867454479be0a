"""Versioned JSON checkpoints of trained models.

``{"format": "mate-checkpoint", "version": 1, "mode": .., "members": [..]}``; each
member stores its encoder layers and heads as nested lists. EPCS checkpoints hold
one member per camera. Floats are written at full ``repr`` precision.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from mate_reid.errors import DataError
from mate_reid.net import BaselineEnsemble, Model, ModelParams
from mate_reid.schemas import TrainMode
from mate_reid.utils import get_logger

logger = get_logger(__name__)

CHECKPOINT_FORMAT = "mate-checkpoint"


class _Record(BaseModel):
    model_config = ConfigDict(extra="forbid", allow_inf_nan=False)


class LayerRecord(_Record):
    shape: tuple[int, int]
    weight: list[list[float]]
    bias: list[float]

    @model_validator(mode="after")
    def _check_shape(self) -> "LayerRecord":
        rows, cols = self.shape
        if len(self.weight) != rows or any(len(row) != cols for row in self.weight) or len(self.bias) != rows:
            raise ValueError(f"layer arrays do not match declared shape {list(self.shape)}")
        return self


class HeadRecord(_Record):
    shape: tuple[int, int]
    weight: list[list[float]]

    @model_validator(mode="after")
    def _check_shape(self) -> "HeadRecord":
        rows, cols = self.shape
        if len(self.weight) != rows or any(len(row) != cols for row in self.weight):
            raise ValueError(f"head array does not match declared shape {list(self.shape)}")
        return self


class MemberRecord(_Record):
    encoder_layers: list[LayerRecord]
    heads: list[HeadRecord]

    @classmethod
    def from_params(cls, params: ModelParams) -> "MemberRecord":
        return cls(
            encoder_layers=[
                LayerRecord(shape=w.shape, weight=w.tolist(), bias=b.tolist()) for w, b in params.encoder_layers
            ],
            heads=[HeadRecord(shape=u.shape, weight=u.tolist()) for u in params.heads],
        )

    def to_params(self) -> ModelParams:
        return ModelParams(
            encoder_layers=[
                (np.asarray(layer.weight, dtype=np.float64), np.asarray(layer.bias, dtype=np.float64))
                for layer in self.encoder_layers
            ],
            heads=[np.asarray(head.weight, dtype=np.float64).reshape(head.shape) for head in self.heads],
        )


class CheckpointFile(_Record):
    format: Literal["mate-checkpoint"] = CHECKPOINT_FORMAT
    version: Literal[1] = 1
    mode: TrainMode
    members: list[MemberRecord]

    @model_validator(mode="after")
    def _check_members(self) -> "CheckpointFile":
        if not self.members:
            raise ValueError("checkpoint has no members")
        if self.mode is not TrainMode.EPCS and len(self.members) != 1:
            raise ValueError(f"{self.mode.value} checkpoints hold exactly one member")
        for member in self.members:
            if not member.encoder_layers:
                raise ValueError("member has no encoder layers")
            widths = [member.encoder_layers[0].shape[1]] + [layer.shape[0] for layer in member.encoder_layers]
            if any(layer.shape[1] != width for layer, width in zip(member.encoder_layers, widths)):
                raise ValueError("encoder layer widths do not chain")
            if any(head.shape[1] != widths[-1] for head in member.heads):
                raise ValueError("head width differs from the feature dimension")
        return self


def save_checkpoint(model: Model, mode: TrainMode, path: str | Path) -> Path:
    members = model.members if isinstance(model, BaselineEnsemble) else [model]
    record = CheckpointFile(mode=mode, members=[MemberRecord.from_params(member) for member in members])
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", encoding="utf-8") as handle:
        json.dump(record.model_dump(mode="json"), handle, separators=(",", ":"), allow_nan=False)
        handle.write("\n")
    logger.info("saved %s checkpoint (%d member(s)) to %s", mode.value, len(members), target)
    return target


def load_checkpoint(path: str | Path) -> tuple[Model, TrainMode]:
    source = Path(path)
    try:
        payload = json.loads(source.read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"cannot read checkpoint {source}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{source}: malformed checkpoint JSON at line {exc.lineno}: {exc.msg}") from exc
    try:
        record = CheckpointFile.model_validate(payload)
    except ValidationError as exc:
        first = exc.errors()[0]
        where = ".".join(str(part) for part in first["loc"]) or "<root>"
        raise DataError(f"{source}: invalid checkpoint field {where}: {first['msg']}") from exc

    members = [member.to_params() for member in record.members]
    model: Model = BaselineEnsemble(members=members) if record.mode is TrainMode.EPCS else members[0]
    return model, record.mode
