from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from mate_reid.config import SamplerConfig
from mate_reid.schemas import IcsDataset, MiniBatch, Sample


@dataclass(slots=True, eq=False)
class IdentityIndex:
    """Images of every identity, grouped per camera: ``pools[p - 1][k - 1]``."""

    pools: list[list[tuple[Sample, ...]]]

    @classmethod
    def build(cls, dataset: IcsDataset) -> "IdentityIndex":
        pools = []
        for samples, n_p in zip(dataset.per_camera, dataset.label_space_sizes):
            grouped: list[list[Sample]] = [[] for _ in range(n_p)]
            for sample in samples:
                grouped[sample.label - 1].append(sample)
            pools.append([tuple(group) for group in grouped])
        return cls(pools=pools)


def draw(rng: np.random.Generator, pool_size: int, k: int) -> np.ndarray:
    """k indices into a pool: without replacement while the pool lasts, the rest with replacement."""
    if k <= pool_size:
        return rng.choice(pool_size, size=k, replace=False)
    return np.concatenate([rng.permutation(pool_size), rng.choice(pool_size, size=k - pool_size, replace=True)])


def batch_size(dataset: IcsDataset, cfg: SamplerConfig) -> int:
    return dataset.M * cfg.identities_per_camera * cfg.images_per_identity


def balanced_minibatch(
    dataset: IcsDataset,
    cfg: SamplerConfig,
    rng: np.random.Generator,
    index: Optional[IdentityIndex] = None,
) -> MiniBatch:
    """Same number of identities from every camera, same number of images per identity."""
    index = index or IdentityIndex.build(dataset)
    chosen: list[Sample] = []
    for identities in index.pools:
        for k in draw(rng, len(identities), cfg.identities_per_camera):
            images = identities[int(k)]
            chosen.extend(images[int(i)] for i in draw(rng, len(images), cfg.images_per_identity))
    return MiniBatch.from_samples(chosen)
