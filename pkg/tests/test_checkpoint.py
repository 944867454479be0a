from __future__ import annotations

import json

import pytest

from conftest import random_params
from mate_reid.checkpoint import load_checkpoint, save_checkpoint
from mate_reid.errors import DataError
from mate_reid.net import BaselineEnsemble
from mate_reid.schemas import TrainMode


def test_single_model_round_trip_is_exact(tmp_path):
    params = random_params(0, 5, [3, 4], hidden=(6, 5))
    path = save_checkpoint(params, TrainMode.MATE, tmp_path / "ckpt" / "model.json")
    loaded, mode = load_checkpoint(path)
    assert mode is TrainMode.MATE
    assert loaded.array_equal(params)


def test_epcs_checkpoint_keeps_every_member(tmp_path):
    members = [random_params(seed, 5, [3]) for seed in range(3)]
    loaded, mode = load_checkpoint(save_checkpoint(BaselineEnsemble(members=members), TrainMode.EPCS, tmp_path / "e.json"))
    assert mode is TrainMode.EPCS
    assert isinstance(loaded, BaselineEnsemble)
    assert all(a.array_equal(b) for a, b in zip(loaded.members, members))


def test_checkpoint_rejects_wrong_format_and_shapes(tmp_path):
    path = save_checkpoint(random_params(0, 5, [3]), TrainMode.PCMT, tmp_path / "m.json")
    payload = json.loads(path.read_text())

    payload["format"] = "something-else"
    path.write_text(json.dumps(payload))
    with pytest.raises(DataError, match="format"):
        load_checkpoint(path)

    payload["format"] = "mate-checkpoint"
    payload["members"][0]["heads"][0]["shape"] = [3, 99]
    path.write_text(json.dumps(payload))
    with pytest.raises(DataError):
        load_checkpoint(path)


def test_checkpoint_rejects_malformed_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{")
    with pytest.raises(DataError, match="malformed"):
        load_checkpoint(path)


def test_missing_checkpoint_is_a_data_error(tmp_path):
    with pytest.raises(DataError, match="cannot read checkpoint"):
        load_checkpoint(tmp_path / "absent.json")
