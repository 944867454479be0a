from __future__ import annotations

import math

import numpy as np
import pytest

from conftest import identity_params, random_params
from mate_reid.errors import ConfigError, DataError
from mate_reid.net import encode, softmax
from mate_reid.objective import loss_ml, loss_mt, loss_total, singleton_multilabels
from mate_reid.schemas import MiniBatch, MultiLabelSet, Sample


def _ce(params, x, head, label):
    probs = softmax(params.heads[head - 1] @ encode(params, x))
    return -math.log(probs[label - 1])


def _random_batch(seed: int, cameras: list[int], labels: list[int], dim: int = 5) -> MiniBatch:
    rng = np.random.default_rng(seed)
    return MiniBatch.from_samples(
        [Sample(id=i + 1, x=tuple(rng.normal(size=dim)), camera=c, label=y) for i, (c, y) in enumerate(zip(cameras, labels))]
    )


def test_loss_mt_of_certain_predictions_is_zero():
    params = identity_params(2, [2], heads=[np.array([[900.0, 0.0], [0.0, 900.0]])])
    batch = MiniBatch.from_samples([Sample(id=1, x=(1.0, 0.0), camera=1, label=1)])
    assert loss_mt(params, batch) == pytest.approx(0.0, abs=1e-12)


def test_loss_mt_half_probability_is_ln2():
    params = identity_params(2, [2])
    batch = MiniBatch.from_samples([Sample(id=1, x=(1.0, -1.0), camera=1, label=2)])
    assert loss_mt(params, batch) == pytest.approx(math.log(2.0), abs=1e-12)


def test_loss_mt_averages_camera_means():
    params = random_params(0, 5, [3, 2])
    batch = _random_batch(1, [1, 1, 1, 2], [1, 2, 3, 2])
    per_camera: dict[int, list[float]] = {}
    for sample in batch.samples:
        per_camera.setdefault(sample.camera, []).append(_ce(params, sample.x, sample.camera, sample.label))
    expected = sum(sum(values) / len(values) for values in per_camera.values()) / len(per_camera)
    assert loss_mt(params, batch) == pytest.approx(expected, abs=1e-12)


def test_loss_mt_skips_cameras_absent_from_the_batch():
    params = random_params(4, 5, [3, 2, 2])
    batch = _random_batch(5, [1, 1, 3], [2, 3, 1])
    camera_one = (_ce(params, batch.samples[0].x, 1, 2) + _ce(params, batch.samples[1].x, 1, 3)) / 2
    camera_three = _ce(params, batch.samples[2].x, 3, 1)
    assert loss_mt(params, batch) == pytest.approx((camera_one + camera_three) / 2, abs=1e-12)


def test_loss_ml_singletons_is_flat_sample_mean():
    params = random_params(0, 5, [3, 2])
    batch = _random_batch(2, [1, 1, 1, 2], [1, 2, 3, 2])
    labels = singleton_multilabels([(1, 1), (1, 2), (1, 3), (2, 1), (2, 2)])
    expected = np.mean([_ce(params, s.x, s.camera, s.label) for s in batch.samples])
    assert loss_ml(params, batch, labels) == pytest.approx(expected, abs=1e-12)


def test_loss_ml_averages_labels_then_samples():
    params = random_params(3, 5, [2, 2, 2])
    batch = _random_batch(3, [1, 2, 3], [1, 2, 1])
    labels = {
        (1, 1): MultiLabelSet.singleton((1, 1)),
        (2, 2): MultiLabelSet(owner=(2, 2), labels=frozenset({(2, 2), (3, 2)})),
        (3, 1): MultiLabelSet(owner=(3, 1), labels=frozenset({(1, 2), (2, 1), (3, 1)})),
    }
    x = [s.x for s in batch.samples]
    expected = (
        _ce(params, x[0], 1, 1)
        + (_ce(params, x[1], 2, 2) + _ce(params, x[1], 3, 2)) / 2
        + (_ce(params, x[2], 1, 2) + _ce(params, x[2], 2, 1) + _ce(params, x[2], 3, 1)) / 3
    ) / 3
    assert loss_ml(params, batch, labels) == pytest.approx(expected, abs=1e-12)


def test_loss_total_combines_components():
    params = random_params(4, 5, [3, 2])
    batch = _random_batch(4, [1, 2], [3, 1])
    labels = {(1, 3): MultiLabelSet(owner=(1, 3), labels=frozenset({(1, 3), (2, 1)})),
              (2, 1): MultiLabelSet(owner=(2, 1), labels=frozenset({(1, 3), (2, 1)}))}
    mt, ml = loss_mt(params, batch), loss_ml(params, batch, labels)
    assert loss_total(params, batch, None, 0.0) == loss_mt(params, batch)
    assert loss_total(params, batch, labels, 1.0) == pytest.approx(mt + ml, abs=1e-12)
    assert loss_total(params, batch, labels, 0.5) == pytest.approx(mt + 0.5 * ml, abs=1e-12)


@pytest.mark.parametrize("lam", [-0.1, 1.5])
def test_loss_total_rejects_lambda_outside_unit_interval(lam):
    params = random_params(0, 5, [2])
    with pytest.raises(ConfigError):
        loss_total(params, _random_batch(0, [1], [1]), None, lam)


def test_missing_multilabel_and_empty_batch_are_data_errors():
    params = random_params(0, 5, [2])
    batch = _random_batch(0, [1], [2])
    with pytest.raises(DataError):
        loss_ml(params, batch, {(1, 1): MultiLabelSet.singleton((1, 1))})
    with pytest.raises(DataError):
        loss_mt(params, MiniBatch.from_samples([]))


def test_multilabel_set_invariants():
    with pytest.raises(ValueError):
        MultiLabelSet(owner=(1, 1), labels=frozenset({(2, 1)}))
    with pytest.raises(ValueError):
        MultiLabelSet(owner=(1, 1), labels=frozenset({(1, 1), (2, 1), (2, 2)}))
