from __future__ import annotations

from typing import Sequence

import numpy as np
import pytest

from mate_reid.config import NetConfig, OptimizerConfig, SynthConfig, TrainConfig
from mate_reid.data import generate_synthetic
from mate_reid.net import ModelParams, init_params
from mate_reid.schemas import IcsDataset, MiniBatch, Sample


def make_dataset(
    cameras: Sequence[Sequence[tuple[int, Sequence[float]]]],
    *,
    global_ids: Sequence[Sequence[int]] | None = None,
    query: Sequence[Sample] = (),
    gallery: Sequence[Sample] = (),
) -> IcsDataset:
    """Build a dataset from per-camera lists of (label, vector)."""
    next_id = 1
    per_camera = []
    for p, entries in enumerate(cameras, start=1):
        samples = []
        for index, (label, x) in enumerate(entries):
            gid = global_ids[p - 1][index] if global_ids is not None else None
            samples.append(Sample(id=next_id, x=tuple(float(v) for v in x), camera=p, label=label, global_id=gid))
            next_id += 1
        per_camera.append(tuple(samples))
    sizes = tuple(max(label for label, _ in entries) for entries in cameras)
    return IcsDataset(per_camera=tuple(per_camera), label_space_sizes=sizes, query=tuple(query), gallery=tuple(gallery))


def batch_of(samples: Sequence[Sample]) -> MiniBatch:
    return MiniBatch.from_samples(samples)


def random_params(
    seed: int, input_dim: int, head_sizes: Sequence[int], hidden: tuple[int, ...] = (6,), feature_dim: int = 4
) -> ModelParams:
    cfg = NetConfig(hidden_sizes=hidden, feature_dim=feature_dim)
    return init_params(input_dim, head_sizes, cfg, np.random.default_rng(seed))


def identity_params(dim: int, head_sizes: Sequence[int], heads: Sequence[np.ndarray] | None = None) -> ModelParams:
    """Single linear layer with identity weights, so features equal inputs."""
    return ModelParams(
        encoder_layers=[(np.eye(dim), np.zeros(dim))],
        heads=list(heads) if heads is not None else [np.zeros((n, dim)) for n in head_sizes],
    )


@pytest.fixture
def tiny_synth() -> SynthConfig:
    return SynthConfig(
        num_cameras=3,
        num_identities=10,
        reappear_fraction=1.0,
        samples_per_identity_per_camera=3,
        latent_dim=4,
        input_dim=6,
        camera_transform_scale=0.3,
        noise_sigma=0.1,
        test_identities=5,
        test_samples_per_identity_per_camera=2,
        seed=3,
    )


@pytest.fixture
def tiny_dataset(tiny_synth) -> IcsDataset:
    return generate_synthetic(tiny_synth)


@pytest.fixture
def tiny_train_config() -> TrainConfig:
    return TrainConfig(
        rounds=2,
        epochs_per_round=1,
        final_round_epochs=1,
        optimizer=OptimizerConfig(lr_backbone=0.1, lr_heads=0.1),
        network=NetConfig(hidden_sizes=(8,), feature_dim=4),
        seed=0,
    )


@pytest.fixture
def two_camera_dataset() -> IcsDataset:
    """Two cameras, three identities each, two images per identity, global ids attached."""
    rng = np.random.default_rng(11)
    cameras, gids = [], []
    for _ in range(2):
        entries = [(label, rng.normal(size=5)) for label in (1, 1, 2, 2, 3, 3)]
        cameras.append(entries)
        gids.append([10, 10, 20, 20, 30, 30])
    return make_dataset(cameras, global_ids=gids)
