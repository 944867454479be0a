"""Retrieval evaluation: Euclidean ranking, CMC and mAP, embedding dumps.

Gallery entries that share both camera and identity with the query are removed
before ranking (the usual cross-camera protocol). Distances are not length
normalised unless ``normalize`` is set.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from mate_reid.errors import DataError
from mate_reid.net import Model, encode_model
from mate_reid.schemas import EvalResult, IcsDataset, RankedList, Sample
from mate_reid.utils import get_logger, write_json

logger = get_logger(__name__)

DEFAULT_MAX_RANK = 20
MISSING_GLOBAL_ID = -1


@dataclass(slots=True, frozen=True)
class Embedding:
    id: int
    camera: int
    global_id: int
    vector: np.ndarray


@dataclass(slots=True, eq=False)
class FeatureTable:
    """One feature row per sample; ``global_ids`` uses -1 for unknown identities."""

    ids: np.ndarray
    cameras: np.ndarray
    global_ids: np.ndarray
    features: np.ndarray

    def __len__(self) -> int:
        return int(self.ids.size)

    @property
    def dim(self) -> int:
        return int(self.features.shape[1]) if self.features.ndim == 2 else 0

    def row(self, i: int) -> Embedding:
        return Embedding(
            id=int(self.ids[i]),
            camera=int(self.cameras[i]),
            global_id=int(self.global_ids[i]),
            vector=self.features[i],
        )

    @classmethod
    def empty(cls, dim: int = 0) -> "FeatureTable":
        ints = np.zeros(0, dtype=np.int64)
        return cls(ids=ints, cameras=ints.copy(), global_ids=ints.copy(), features=np.zeros((0, dim)))


def extract_features(model: Model, samples: Sequence[Sample], *, normalize: bool = False) -> FeatureTable:
    if not samples:
        return FeatureTable.empty()
    x = np.asarray([sample.x for sample in samples], dtype=np.float64)
    features = encode_model(model, x)
    if normalize:
        norms = np.linalg.norm(features, axis=1, keepdims=True)
        features = features / np.where(norms > 0.0, norms, 1.0)
    return FeatureTable(
        ids=np.asarray([sample.id for sample in samples], dtype=np.int64),
        cameras=np.asarray([sample.camera for sample in samples], dtype=np.int64),
        global_ids=np.asarray(
            [MISSING_GLOBAL_ID if sample.global_id is None else sample.global_id for sample in samples],
            dtype=np.int64,
        ),
        features=features,
    )


def rank(query: Embedding, gallery: FeatureTable) -> RankedList:
    """Admissible gallery sorted by squared Euclidean distance, ties by ascending gallery id."""
    admissible = ~((gallery.cameras == query.camera) & (gallery.global_ids == query.global_id))
    if not np.any(admissible):
        raise DataError(f"query {query.id}: gallery is empty after same-camera filtering")
    if gallery.dim != query.vector.shape[0]:
        raise DataError(f"query {query.id}: feature dimension {query.vector.shape[0]} != gallery {gallery.dim}")
    ids = gallery.ids[admissible]
    diff = gallery.features[admissible] - query.vector
    distances = np.einsum("ij,ij->i", diff, diff)
    order = np.lexsort((ids, distances))
    return RankedList(
        query_id=query.id,
        gallery_ids=tuple(int(i) for i in ids[order]),
        relevant=tuple(bool(flag) for flag in (gallery.global_ids[admissible][order] == query.global_id)),
    )


def cmc(lists: Sequence[RankedList], k: int) -> tuple[float, ...]:
    """cmc[j] is the fraction of queries whose first relevant entry has rank <= j + 1."""
    if k < 1:
        raise ValueError(f"CMC depth must be at least 1, got {k}")
    if not lists:
        return tuple(0.0 for _ in range(k))
    hits = np.asarray([ranked.first_hit or np.inf for ranked in lists], dtype=np.float64)
    return tuple(float(np.mean(hits <= j)) for j in range(1, k + 1))


def average_precision(ranked: RankedList) -> float:
    positions = np.flatnonzero(np.asarray(ranked.relevant)) + 1
    if positions.size == 0:
        raise ValueError(f"query {ranked.query_id} has no relevant gallery entry")
    return float(np.mean(np.arange(1, positions.size + 1) / positions))


def mean_ap(lists: Sequence[RankedList]) -> float:
    if not lists:
        return 0.0
    return float(np.mean([average_precision(ranked) for ranked in lists]))


def evaluate_tables(
    query: FeatureTable,
    gallery: FeatureTable,
    *,
    max_rank: int = DEFAULT_MAX_RANK,
    max_workers: Optional[int] = None,
) -> EvalResult:
    rows = [query.row(i) for i in range(len(query))]
    if max_workers and max_workers > 1 and len(rows) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as executor:
            ranked = list(executor.map(lambda row: rank(row, gallery), rows))
    else:
        ranked = [rank(row, gallery) for row in rows]

    scored = [item for item in ranked if item.has_relevant]
    skipped = len(ranked) - len(scored)
    if skipped:
        logger.warning("skipped %d of %d queries without a relevant cross-camera gallery entry", skipped, len(ranked))
    return EvalResult(cmc=cmc(scored, max_rank), mean_ap=mean_ap(scored), query_count=len(scored), skipped_queries=skipped)


def evaluate(
    model: Model,
    dataset: IcsDataset,
    *,
    max_rank: int = DEFAULT_MAX_RANK,
    normalize: bool = False,
    max_workers: Optional[int] = None,
) -> EvalResult:
    """CMC and mAP of ``model`` on the dataset's query/gallery split."""
    if not dataset.query or not dataset.gallery:
        raise DataError("dataset has no query/gallery split to evaluate on")
    result = evaluate_tables(
        extract_features(model, dataset.query, normalize=normalize),
        extract_features(model, dataset.gallery, normalize=normalize),
        max_rank=max_rank,
        max_workers=max_workers,
    )
    summary = result.summary()
    logger.info(
        "evaluated %d queries: R1 %.4f, R10 %.4f, R20 %.4f, mAP %.4f",
        result.query_count,
        summary["R1"],
        summary["R10"],
        summary["R20"],
        summary["mAP"],
    )
    return result


def write_metrics(result: EvalResult, path: str | Path) -> Path:
    payload = {**result.summary(), "queries": result.query_count, "skipped_queries": result.skipped_queries}
    return write_json(path, payload)


def dump_embeddings(table: FeatureTable, path: str | Path) -> Path:
    """CSV with id, camera, global_id and one column per feature component."""
    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        with target.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["id", "camera", "global_id", *(f"f{j}" for j in range(table.dim))])
            for i in range(len(table)):
                gid = int(table.global_ids[i])
                writer.writerow(
                    [
                        int(table.ids[i]),
                        int(table.cameras[i]),
                        "" if gid == MISSING_GLOBAL_ID else gid,
                        *(repr(float(v)) for v in table.features[i]),
                    ]
                )
    except OSError as exc:
        raise DataError(f"cannot write embeddings to {target}: {exc}") from exc
    return target


def load_embeddings(path: str | Path) -> FeatureTable:
    source = Path(path)
    try:
        with source.open("r", encoding="utf-8", newline="") as handle:
            rows = list(csv.reader(handle))
    except OSError as exc:
        raise DataError(f"cannot read embeddings {source}: {exc}") from exc
    if not rows or rows[0][:3] != ["id", "camera", "global_id"]:
        raise DataError(f"{source}: missing embedding header")
    dim = len(rows[0]) - 3
    if len(rows) == 1:
        return FeatureTable.empty(dim)
    try:
        body = [row for row in rows[1:] if row]
        if any(len(row) != dim + 3 for row in body):
            raise ValueError("row length differs from the header")
        return FeatureTable(
            ids=np.asarray([int(row[0]) for row in body], dtype=np.int64),
            cameras=np.asarray([int(row[1]) for row in body], dtype=np.int64),
            global_ids=np.asarray([int(row[2]) if row[2] else MISSING_GLOBAL_ID for row in body], dtype=np.int64),
            features=np.asarray([[float(v) for v in row[3:]] for row in body], dtype=np.float64).reshape(len(body), dim),
        )
    except ValueError as exc:
        raise DataError(f"{source}: malformed embedding row: {exc}") from exc
