"""Training plans for the comparison baselines.

* PCMT trains the multi-head model on L_mt alone (MATE with lambda = 0).
* MCST merges the camera label spaces into one naive label space of size
  sum(N_p), so the same person in two cameras becomes two classes.
* EPCS trains one model per camera on that camera's data only; their features
  are concatenated at test time.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from mate_reid.config import NetConfig, TrainConfig
from mate_reid.errors import ConfigError
from mate_reid.schemas import IcsDataset, TrainMode


@dataclass(slots=True)
class MemberPlan:
    member: int
    dataset: IcsDataset
    cfg: TrainConfig


@dataclass(slots=True)
class TrainingPlan:
    mode: TrainMode
    members: list[MemberPlan]
    ensemble: bool = False

    def feature_dim(self, network: NetConfig) -> int:
        return network.feature_dim * len(self.members) if self.ensemble else network.feature_dim


def merged_label_space(dataset: IcsDataset) -> IcsDataset:
    """One pseudo-camera whose labels are the camera labels offset by the preceding label spaces."""
    samples = []
    offset = 0
    for camera_samples, n_p in zip(dataset.per_camera, dataset.label_space_sizes):
        samples.extend(replace(sample, camera=1, label=offset + sample.label) for sample in camera_samples)
        offset += n_p
    return IcsDataset(per_camera=(tuple(samples),), label_space_sizes=(offset,)).validate()


def single_camera_view(dataset: IcsDataset, p: int) -> IcsDataset:
    if not 1 <= p <= dataset.M:
        raise ValueError(f"camera {p} outside 1..{dataset.M}")
    samples = tuple(replace(sample, camera=1) for sample in dataset.per_camera[p - 1])
    return IcsDataset(per_camera=(samples,), label_space_sizes=(dataset.label_space_sizes[p - 1],)).validate()


def build_baseline(dataset: IcsDataset, mode: TrainMode | str, cfg: TrainConfig) -> TrainingPlan:
    try:
        mode = TrainMode(mode)
    except ValueError as exc:
        raise ConfigError(f"unknown training mode {mode!r}") from exc
    if not mode.is_baseline:
        raise ConfigError(f"{mode.value} is not a baseline mode")

    base = cfg.updated(lam=0.0, mode=mode.value)
    if mode is TrainMode.PCMT:
        return TrainingPlan(mode=mode, members=[MemberPlan(member=0, dataset=dataset, cfg=base)])
    if mode is TrainMode.MCST:
        # The merged space has one camera; keep the batch size B of the multi-camera sampler.
        sampler = {"identities_per_camera": cfg.sampler.identities_per_camera * dataset.M}
        return TrainingPlan(
            mode=mode,
            members=[MemberPlan(member=0, dataset=merged_label_space(dataset), cfg=base.updated(sampler=sampler))],
        )
    return TrainingPlan(
        mode=mode,
        members=[MemberPlan(member=p, dataset=single_camera_view(dataset, p), cfg=base) for p in range(1, dataset.M + 1)],
        ensemble=True,
    )
