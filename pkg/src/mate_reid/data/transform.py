from __future__ import annotations

from dataclasses import replace

from mate_reid.schemas import IcsDataset, Sample
from mate_reid.utils import get_logger, rng_stream

logger = get_logger(__name__)


def ics_transform(dataset: IcsDataset, seed: int) -> IcsDataset:
    """Relabel every camera independently onto 1..N_p.

    Input training labels are global identity labels. Per camera, the sorted distinct
    labels are mapped through a permutation of 1..N_p drawn from the camera's own
    stream, so equal labels in different cameras stop meaning anything. The global
    label is kept as the hidden ``global_id``; the test split is returned unchanged.
    """
    per_camera: list[tuple[Sample, ...]] = []
    sizes: list[int] = []
    for p, samples in enumerate(dataset.per_camera, start=1):
        global_labels = sorted({_global_label(sample) for sample in samples})
        permutation = rng_stream(seed, "ics", p).permutation(len(global_labels)) + 1
        mapping = {g: int(local) for g, local in zip(global_labels, permutation)}
        per_camera.append(
            tuple(
                replace(sample, label=mapping[_global_label(sample)], global_id=_global_label(sample))
                for sample in samples
            )
        )
        sizes.append(len(global_labels))
        logger.debug("camera %d relabelled onto 1..%d", p, len(global_labels))

    return IcsDataset(
        per_camera=tuple(per_camera),
        label_space_sizes=tuple(sizes),
        query=dataset.query,
        gallery=dataset.gallery,
    ).validate()


def _global_label(sample: Sample) -> int:
    return sample.global_id if sample.global_id is not None else sample.label
