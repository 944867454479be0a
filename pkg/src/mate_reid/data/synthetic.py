"""Synthetic multi-camera observations of latent person identities.

Each identity g has a latent vector z_g ~ N(0, I). Camera p sees it through a fixed
affine map, x = A_p z_g + b_p + N(0, noise_sigma^2 I), with A_p = P + s R_p sharing a
projection P across cameras and s = camera_transform_scale controlling how far the
views drift apart. Every random draw comes from a named stream (see utils.rng_stream),
so one camera's content does not depend on the others.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mate_reid.config import SynthConfig
from mate_reid.data.transform import ics_transform
from mate_reid.errors import ConfigError
from mate_reid.schemas import IcsDataset, Sample
from mate_reid.utils import get_logger, rng_stream

logger = get_logger(__name__)


@dataclass(slots=True)
class CameraModel:
    weight: np.ndarray  # A_p, (input_dim, latent_dim)
    bias: np.ndarray  # b_p, (input_dim,)

    def observe(self, latents: np.ndarray, noise: np.ndarray, sigma: float) -> np.ndarray:
        """Map latents (n, latent_dim) and standard noise (n, s, input_dim) to (n, s, input_dim)."""
        clean = latents @ self.weight.T + self.bias
        return clean[:, None, :] + sigma * noise


def camera_models(cfg: SynthConfig) -> list[CameraModel]:
    shared = rng_stream(cfg.seed, "projection").normal(size=(cfg.input_dim, cfg.latent_dim)) / np.sqrt(cfg.latent_dim)
    models = []
    for p in range(1, cfg.num_cameras + 1):
        rng = rng_stream(cfg.seed, "transform", p)
        drift = rng.normal(size=(cfg.input_dim, cfg.latent_dim)) / np.sqrt(cfg.latent_dim)
        offset = rng.normal(size=cfg.input_dim)
        models.append(
            CameraModel(
                weight=shared + cfg.camera_transform_scale * drift,
                bias=cfg.camera_transform_scale * offset,
            )
        )
    return models


def visible_identities(cfg: SynthConfig, camera: int) -> np.ndarray:
    """Global ids (1-based, ascending) seen by ``camera``: each kept with probability reappear_fraction."""
    draws = rng_stream(cfg.seed, "visible", camera).random(cfg.num_identities)
    return np.flatnonzero(draws < cfg.reappear_fraction) + 1


def held_out_cameras(cfg: SynthConfig) -> list[np.ndarray]:
    """Cameras (1-based) observing each test identity; at least two per identity."""
    rng = rng_stream(cfg.seed, "test-visible")
    cameras = []
    for _ in range(cfg.test_identities):
        mask = rng.random(cfg.num_cameras) < cfg.reappear_fraction
        fallback = rng.permutation(cfg.num_cameras)
        chosen = np.flatnonzero(mask) + 1
        if chosen.size < 2:
            chosen = np.sort(fallback[:2]) + 1
        cameras.append(chosen)
    return cameras


def generate_synthetic(cfg: SynthConfig) -> IcsDataset:
    """Generate an ICS-labelled dataset; a pure function of ``cfg``."""
    visible = [visible_identities(cfg, p) for p in range(1, cfg.num_cameras + 1)]
    for p, ids in enumerate(visible, start=1):
        if ids.size < 2:
            raise ConfigError(
                f"camera {p} observes {ids.size} of {cfg.num_identities} identities; "
                "at least 2 are required (raise reappear_fraction or num_identities)"
            )

    models = camera_models(cfg)
    latents = rng_stream(cfg.seed, "latent").normal(size=(cfg.num_identities, cfg.latent_dim))
    next_id = 1

    per_camera: list[tuple[Sample, ...]] = []
    for p, (ids, model) in enumerate(zip(visible, models), start=1):
        noise = rng_stream(cfg.seed, "noise", p).normal(
            size=(ids.size, cfg.samples_per_identity_per_camera, cfg.input_dim)
        )
        observations = model.observe(latents[ids - 1], noise, cfg.noise_sigma)
        samples = []
        for gid, views in zip(ids, observations):
            for x in views:
                samples.append(Sample(id=next_id, x=tuple(float(v) for v in x), camera=p, label=int(gid), global_id=int(gid)))
                next_id += 1
        per_camera.append(tuple(samples))

    query, gallery = _test_split(cfg, models, next_id)
    globally_labelled = IcsDataset(
        per_camera=tuple(per_camera),
        label_space_sizes=tuple(int(ids.size) for ids in visible),
        query=query,
        gallery=gallery,
    )
    dataset = ics_transform(globally_labelled, cfg.seed)
    logger.info(
        "generated %d cameras, identities per camera %s, %d train / %d query / %d gallery samples",
        dataset.M,
        list(dataset.label_space_sizes),
        len(dataset.train_samples()),
        len(dataset.query),
        len(dataset.gallery),
    )
    return dataset


def _test_split(cfg: SynthConfig, models: list[CameraModel], next_id: int) -> tuple[tuple[Sample, ...], tuple[Sample, ...]]:
    if cfg.test_identities == 0:
        return (), ()
    latents = rng_stream(cfg.seed, "test-latent").normal(size=(cfg.test_identities, cfg.latent_dim))
    cameras = held_out_cameras(cfg)
    query: list[Sample] = []
    gallery: list[Sample] = []
    for p, model in enumerate(models, start=1):
        members = np.asarray([t for t, chosen in enumerate(cameras) if p in chosen], dtype=np.int64)
        if members.size == 0:
            continue
        noise = rng_stream(cfg.seed, "test-noise", p).normal(
            size=(members.size, cfg.test_samples_per_identity_per_camera, cfg.input_dim)
        )
        observations = model.observe(latents[members], noise, cfg.noise_sigma)
        for t, views in zip(members, observations):
            gid = cfg.num_identities + int(t) + 1
            for index, x in enumerate(views):
                sample = Sample(id=next_id, x=tuple(float(v) for v in x), camera=p, label=gid, global_id=gid)
                next_id += 1
                (query if index == 0 else gallery).append(sample)
    return tuple(query), tuple(gallery)
