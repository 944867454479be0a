"""Training objectives.

Both losses are written as weighted sums of cross-entropy terms
``w * -log g^c(f(x_row))[y]`` so that the forward value and the gradient in
``net.loss_and_gradients`` are computed by the same code.

* L_mt averages each present camera's mean own-head cross-entropy, then averages
  over the M' cameras present in the batch.
* L_ml gives every sample its multi-label set Y (owner label included) and averages
  the |Y| head cross-entropies, then averages over the B samples.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from mate_reid.errors import ConfigError, DataError
from mate_reid.net import ModelParams, cross_entropy, encode
from mate_reid.schemas import Identity, MiniBatch, MultiLabelSet


@dataclass(slots=True, eq=False)
class CrossEntropyTerms:
    rows: np.ndarray
    heads: np.ndarray
    classes: np.ndarray
    weights: np.ndarray

    def __len__(self) -> int:
        return int(self.rows.size)


def check_lambda(lam: float) -> float:
    if not 0.0 <= lam <= 1.0:
        raise ConfigError(f"loss weight lambda must lie in [0, 1], got {lam}")
    return lam


def _require_samples(batch: MiniBatch) -> None:
    if batch.size == 0:
        raise DataError("empty mini-batch")


def mt_terms(batch: MiniBatch) -> CrossEntropyTerms:
    _require_samples(batch)
    counts = batch.per_camera_counts
    per_sample_count = np.asarray([counts[int(c)] for c in batch.cameras], dtype=np.float64)
    return CrossEntropyTerms(
        rows=np.arange(batch.size),
        heads=batch.cameras.copy(),
        classes=batch.labels.copy(),
        weights=1.0 / (len(counts) * per_sample_count),
    )


def ml_terms(batch: MiniBatch, multilabels: Mapping[Identity, MultiLabelSet]) -> CrossEntropyTerms:
    _require_samples(batch)
    rows, heads, classes, weights = [], [], [], []
    for i, (camera, label) in enumerate(zip(batch.cameras, batch.labels)):
        owner = (int(camera), int(label))
        label_set = multilabels.get(owner)
        if label_set is None:
            raise DataError(f"no multi-label set for identity {owner}")
        weight = 1.0 / (batch.size * len(label_set.labels))
        for c, y in label_set.ordered():
            rows.append(i)
            heads.append(c)
            classes.append(y)
            weights.append(weight)
    return CrossEntropyTerms(
        rows=np.asarray(rows, dtype=np.int64),
        heads=np.asarray(heads, dtype=np.int64),
        classes=np.asarray(classes, dtype=np.int64),
        weights=np.asarray(weights, dtype=np.float64),
    )


def _evaluate(params: ModelParams, batch: MiniBatch, terms: CrossEntropyTerms) -> float:
    loss, _, _ = cross_entropy(params, encode(params, batch.x), terms, with_grad=False)
    return loss


def loss_mt(params: ModelParams, batch: MiniBatch) -> float:
    """Per-camera multi-task loss."""
    return _evaluate(params, batch, mt_terms(batch))


def loss_ml(params: ModelParams, batch: MiniBatch, multilabels: Mapping[Identity, MultiLabelSet]) -> float:
    """Cross-camera multi-label loss."""
    return _evaluate(params, batch, ml_terms(batch, multilabels))


def loss_total(
    params: ModelParams,
    batch: MiniBatch,
    multilabels: Optional[Mapping[Identity, MultiLabelSet]],
    lam: float,
) -> float:
    check_lambda(lam)
    total = loss_mt(params, batch)
    if lam > 0.0:
        if multilabels is None:
            raise ValueError("multilabels are required when lambda > 0")
        total += lam * loss_ml(params, batch, multilabels)
    return total


def singleton_multilabels(identities: list[Identity]) -> dict[Identity, MultiLabelSet]:
    """Multi-label sets before any association: every identity carries only its own label."""
    return {identity: MultiLabelSet.singleton(identity) for identity in identities}
