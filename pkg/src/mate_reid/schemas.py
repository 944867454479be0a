from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np

from mate_reid.errors import DataError

Identity = tuple[int, int]
"""(camera, intra-camera label), both 1-based."""


class TrainMode(str, Enum):
    MATE = "mate"
    MATE_NO_CT = "mate-no-ct"
    PCMT = "pcmt"
    MCST = "mcst"
    EPCS = "epcs"

    @property
    def associates(self) -> bool:
        return self in {TrainMode.MATE, TrainMode.MATE_NO_CT}

    @property
    def is_baseline(self) -> bool:
        return self in {TrainMode.PCMT, TrainMode.MCST, TrainMode.EPCS}

    @property
    def label(self) -> str:
        """Row label used in comparison tables."""
        return self.name.replace("_", "-")


@dataclass(frozen=True, slots=True)
class Sample:
    """One observation of a person under one camera."""

    id: int
    x: tuple[float, ...]
    camera: int
    label: int
    global_id: Optional[int] = None  # hidden ground truth, evaluation only


@dataclass(frozen=True, slots=True)
class IcsDataset:
    """Per-camera independently labelled training data plus a held-out test split."""

    per_camera: tuple[tuple[Sample, ...], ...]
    label_space_sizes: tuple[int, ...]
    query: tuple[Sample, ...] = ()
    gallery: tuple[Sample, ...] = ()

    @property
    def M(self) -> int:
        return len(self.per_camera)

    @property
    def input_dim(self) -> int:
        for samples in (*self.per_camera, self.query, self.gallery):
            if samples:
                return len(samples[0].x)
        return 0

    def train_samples(self) -> tuple[Sample, ...]:
        return tuple(sample for samples in self.per_camera for sample in samples)

    def identities(self) -> list[Identity]:
        return [(p, k) for p, n in enumerate(self.label_space_sizes, start=1) for k in range(1, n + 1)]

    def has_ground_truth(self) -> bool:
        return all(sample.global_id is not None for sample in self.train_samples())

    def global_ids_by_identity(self) -> dict[Identity, int]:
        """Map each training identity to its hidden global id."""
        mapping: dict[Identity, int] = {}
        for sample in self.train_samples():
            if sample.global_id is None:
                raise DataError(
                    f"sample {sample.id} (camera {sample.camera}) has no global_id; "
                    "association metrics are unavailable for this dataset"
                )
            key = (sample.camera, sample.label)
            previous = mapping.setdefault(key, sample.global_id)
            if previous != sample.global_id:
                raise DataError(f"identity {key} maps to global ids {previous} and {sample.global_id}")
        return mapping

    def validate(self, *, require_contiguous_labels: bool = True) -> "IcsDataset":
        """Check the data-model invariants, raising DataError on the first violation."""
        if self.M < 1:
            raise DataError("dataset has no cameras")
        if len(self.label_space_sizes) != self.M:
            raise DataError(
                f"label_space_sizes has {len(self.label_space_sizes)} entries for {self.M} cameras"
            )
        dim = self.input_dim
        seen_ids: set[int] = set()
        for p, (samples, n_p) in enumerate(zip(self.per_camera, self.label_space_sizes), start=1):
            if require_contiguous_labels and n_p < 2:
                raise DataError(f"camera {p} declares {n_p} identities; at least 2 are required")
            counts = Counter(sample.label for sample in samples)
            for sample in samples:
                _check_sample(sample, dim)
                if sample.camera != p:
                    raise DataError(f"sample {sample.id} listed under camera {p} has camera {sample.camera}")
                if require_contiguous_labels and not 1 <= sample.label <= n_p:
                    raise DataError(f"sample {sample.id}: label {sample.label} outside 1..{n_p} of camera {p}")
                if sample.id in seen_ids:
                    raise DataError(f"duplicate sample id {sample.id}")
                seen_ids.add(sample.id)
            if require_contiguous_labels:
                empty = [k for k in range(1, n_p + 1) if counts[k] == 0]
                if empty:
                    raise DataError(f"camera {p}: identities {empty} have no samples")
        for split, samples in (("query", self.query), ("gallery", self.gallery)):
            for sample in samples:
                _check_sample(sample, dim)
                if not 1 <= sample.camera <= self.M:
                    raise DataError(f"{split} sample {sample.id}: camera {sample.camera} outside 1..{self.M}")
                if sample.global_id is None:
                    raise DataError(f"{split} sample {sample.id} has no global_id")
                if sample.id in seen_ids:
                    raise DataError(f"{split} sample id {sample.id} is not disjoint from other samples")
                seen_ids.add(sample.id)
        return self


def _check_sample(sample: Sample, dim: int) -> None:
    if len(sample.x) != dim:
        raise DataError(f"sample {sample.id}: vector has dimension {len(sample.x)}, expected {dim}")
    if not all(math.isfinite(value) for value in sample.x):
        raise DataError(f"sample {sample.id}: vector has non-finite components")


@dataclass(frozen=True, slots=True)
class CostEstimate:
    """Leading-term annotation comparison counts."""

    intra_total: int
    inter_low: int
    inter_high: int


@dataclass(frozen=True, slots=True)
class MultiLabelSet:
    owner: Identity
    labels: frozenset[Identity]

    def __post_init__(self) -> None:
        if self.owner not in self.labels:
            raise ValueError(f"multi-label set of {self.owner} does not contain its owner")
        cameras = [camera for camera, _ in self.labels]
        if len(cameras) != len(set(cameras)):
            raise ValueError(f"multi-label set of {self.owner} has two labels in one camera")

    @classmethod
    def singleton(cls, owner: Identity) -> "MultiLabelSet":
        return cls(owner=owner, labels=frozenset({owner}))

    def ordered(self) -> list[Identity]:
        return sorted(self.labels)


@dataclass(frozen=True, slots=True)
class AssociationPair:
    """Cyclically matched identities (p, k) <-> (q, l) with p < q."""

    p: int
    k: int
    q: int
    l: int
    psi: float = field(compare=False)

    def __post_init__(self) -> None:
        if self.p >= self.q:
            raise ValueError(f"association pair cameras must satisfy p < q, got p={self.p}, q={self.q}")

    @classmethod
    def canonical(cls, a: Identity, b: Identity, psi: float) -> "AssociationPair":
        (p, k), (q, l) = sorted((a, b))
        return cls(p=p, k=k, q=q, l=l, psi=psi)

    @property
    def key(self) -> tuple[int, int, int, int]:
        return (self.p, self.k, self.q, self.l)


@dataclass(frozen=True, slots=True)
class CycleAssociation:
    """A surviving k-camera cycle: one identity per camera, in cycle order."""

    members: tuple[Identity, ...]
    degree: float = field(compare=False)


@dataclass(slots=True, eq=False)
class PredictionMatrix:
    """Row k holds the mean camera-``target`` distribution of identity k of camera ``source``."""

    source: int
    target: int
    matrix: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def row(self, k: int) -> np.ndarray:
        return self.matrix[k - 1]


@dataclass(frozen=True, slots=True)
class AssociationReport:
    ground_truth_pairs: int
    predicted_pairs: int
    correct_pairs: int
    precision: float
    recall: float

    @classmethod
    def from_counts(cls, ground_truth: int, predicted: int, correct: int) -> "AssociationReport":
        # Empty predictions are perfectly precise; an empty truth set is perfectly recalled.
        precision = correct / predicted if predicted else 1.0
        recall = correct / ground_truth if ground_truth else 1.0
        return cls(ground_truth, predicted, correct, precision, recall)


@dataclass(slots=True, eq=False)
class MiniBatch:
    samples: tuple[Sample, ...]
    x: np.ndarray
    cameras: np.ndarray
    labels: np.ndarray

    @classmethod
    def from_samples(cls, samples: Sequence[Sample]) -> "MiniBatch":
        samples = tuple(samples)
        if not samples:
            return cls((), np.zeros((0, 0)), np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64))
        return cls(
            samples=samples,
            x=np.asarray([sample.x for sample in samples], dtype=np.float64),
            cameras=np.asarray([sample.camera for sample in samples], dtype=np.int64),
            labels=np.asarray([sample.label for sample in samples], dtype=np.int64),
        )

    @property
    def size(self) -> int:
        return len(self.samples)

    @property
    def per_camera_counts(self) -> dict[int, int]:
        cameras, counts = np.unique(self.cameras, return_counts=True)
        return {int(c): int(n) for c, n in zip(cameras, counts)}


@dataclass(frozen=True, slots=True)
class RankedList:
    query_id: int
    gallery_ids: tuple[int, ...]
    relevant: tuple[bool, ...]

    @property
    def has_relevant(self) -> bool:
        return any(self.relevant)

    @property
    def first_hit(self) -> Optional[int]:
        """1-based rank of the first relevant entry."""
        for position, flag in enumerate(self.relevant, start=1):
            if flag:
                return position
        return None


@dataclass(frozen=True, slots=True)
class EvalResult:
    cmc: tuple[float, ...]
    mean_ap: float
    query_count: int
    skipped_queries: int = 0

    def rank(self, k: int) -> float:
        if not self.cmc:
            return 0.0
        return self.cmc[min(k, len(self.cmc)) - 1]

    def summary(self) -> dict[str, float]:
        """The R1/R10/R20/mAP column layout of the comparison tables."""
        return {"R1": self.rank(1), "R10": self.rank(10), "R20": self.rank(20), "mAP": self.mean_ap}


@dataclass(slots=True)
class LogRecord:
    """One TrainLog row; ``kind`` is ``association`` or ``epoch``."""

    member: int
    kind: str
    round: int
    tick: int
    epoch: Optional[int] = None
    tau: Optional[float] = None
    loss_total: Optional[float] = None
    loss_mt: Optional[float] = None
    loss_ml: Optional[float] = None
    batches: Optional[int] = None
    predicted_pairs: Optional[int] = None
    correct_pairs: Optional[int] = None
    ground_truth_pairs: Optional[int] = None
    precision: Optional[float] = None
    recall: Optional[float] = None


@dataclass(slots=True)
class TrainLog:
    seed: int
    mode: TrainMode
    records: list[LogRecord] = field(default_factory=list)
    elapsed_seconds: float = field(default=0.0, compare=False)

    def epochs(self) -> list[LogRecord]:
        return [record for record in self.records if record.kind == "epoch"]

    def associations(self) -> list[LogRecord]:
        return [record for record in self.records if record.kind == "association"]

    def extend(self, records: Iterable[LogRecord]) -> None:
        self.records.extend(records)
