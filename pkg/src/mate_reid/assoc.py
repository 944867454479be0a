"""Curriculum cyclic association of identities across camera label spaces."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from mate_reid.config import CurriculumSchedule
from mate_reid.errors import ConfigError
from mate_reid.net import ModelParams, encode, head_probs
from mate_reid.schemas import (
    AssociationPair,
    AssociationReport,
    CycleAssociation,
    IcsDataset,
    Identity,
    MultiLabelSet,
    PredictionMatrix,
)
from mate_reid.utils import get_logger

logger = get_logger(__name__)

SUPPORTED_CYCLE_LENGTHS = (2, 3, 4)


@dataclass(slots=True, eq=False)
class CameraView:
    """Encoded training images of one camera, with their intra-camera labels."""

    camera: int
    features: np.ndarray
    labels: np.ndarray
    num_identities: int


def camera_views(params: ModelParams, dataset: IcsDataset) -> list[CameraView]:
    views = []
    for p, (samples, n_p) in enumerate(zip(dataset.per_camera, dataset.label_space_sizes), start=1):
        x = np.asarray([sample.x for sample in samples], dtype=np.float64)
        labels = np.asarray([sample.label for sample in samples], dtype=np.int64)
        views.append(CameraView(camera=p, features=encode(params, x), labels=labels, num_identities=n_p))
    return views


def _predict(params: ModelParams, view: CameraView, q: int) -> PredictionMatrix:
    probs = head_probs(params, q, view.features)
    sums = np.zeros((view.num_identities, probs.shape[1]))
    np.add.at(sums, view.labels - 1, probs)
    counts = np.bincount(view.labels - 1, minlength=view.num_identities)
    return PredictionMatrix(source=view.camera, target=q, matrix=sums / counts[:, None])


def cross_camera_prediction(params: ModelParams, dataset: IcsDataset, p: int, q: int) -> PredictionMatrix:
    """Mean camera-q head distribution of every camera-p identity's images."""
    if p == q:
        raise ValueError(f"cross-camera prediction needs two different cameras, got {p} twice")
    if not (1 <= p <= dataset.M and 1 <= q <= dataset.M):
        raise ValueError(f"cameras ({p}, {q}) outside 1..{dataset.M}")
    samples = dataset.per_camera[p - 1]
    view = CameraView(
        camera=p,
        features=encode(params, np.asarray([sample.x for sample in samples], dtype=np.float64)),
        labels=np.asarray([sample.label for sample in samples], dtype=np.int64),
        num_identities=dataset.label_space_sizes[p - 1],
    )
    return _predict(params, view, q)


def prediction_matrices(
    params: ModelParams,
    dataset: IcsDataset,
    directions: Iterable[tuple[int, int]],
    *,
    max_workers: Optional[int] = None,
) -> dict[tuple[int, int], PredictionMatrix]:
    """PredictionMatrix for every requested (source, target) direction.

    Parameters are only read, so directions may be computed on a thread pool;
    the result is keyed by direction and does not depend on completion order.
    """
    views = camera_views(params, dataset)
    wanted = sorted(set(directions))
    if max_workers and max_workers > 1 and len(wanted) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as executor:
            results = list(executor.map(lambda d: _predict(params, views[d[0] - 1], d[1]), wanted))
    else:
        results = [_predict(params, views[p - 1], q) for p, q in wanted]
    return dict(zip(wanted, results))


def nominate(m: PredictionMatrix, k: int) -> tuple[int, float]:
    """Most likely target identity for source identity k; ties go to the smallest index."""
    row = m.row(k)
    index = int(np.argmax(row))
    return index + 1, float(row[index])


def cyclic_pair(m_pq: PredictionMatrix, m_qp: PredictionMatrix, k: int) -> Optional[tuple[int, float]]:
    """(l*, psi) when k -> l* -> k closes the cycle, otherwise None."""
    l_star, forward = nominate(m_pq, k)
    t_star, _ = nominate(m_qp, l_star)
    if t_star != k:
        return None
    return l_star, forward * float(m_qp.row(l_star)[k - 1])


def curriculum_threshold(sched: CurriculumSchedule, r: int) -> float:
    if not 0 <= r < sched.rounds:
        raise ValueError(f"round {r} outside 0..{sched.rounds - 1}")
    if sched.rounds == 1:
        # The annealing formula divides by R - 1; a single round uses the lower bound.
        return sched.tau_lower
    return min(sched.tau_upper, sched.tau_lower + r / (sched.rounds - 1) * (1.0 - sched.tau_lower))


def _check_partial_matching(pairs: Iterable[AssociationPair]) -> None:
    seen: set[tuple[int, int, int]] = set()
    for pair in pairs:
        for key in ((pair.p, pair.q, -pair.k), (pair.p, pair.q, pair.l)):
            if key in seen:
                raise RuntimeError(f"camera pair ({pair.p}, {pair.q}) matched an identity twice: {pair}")
            seen.add(key)


def build_multilabels(identities: Sequence[Identity], pairs: Iterable[AssociationPair]) -> dict[Identity, MultiLabelSet]:
    """Each identity's label set: its own label plus its partner in every associated camera."""
    labels: dict[Identity, set[Identity]] = {identity: {identity} for identity in identities}
    for pair in pairs:
        labels[(pair.p, pair.k)].add((pair.q, pair.l))
        labels[(pair.q, pair.l)].add((pair.p, pair.k))
    return {owner: MultiLabelSet(owner=owner, labels=frozenset(members)) for owner, members in labels.items()}


def associate_all(
    params: ModelParams,
    dataset: IcsDataset,
    tau: float,
    *,
    max_workers: Optional[int] = None,
) -> tuple[set[AssociationPair], dict[Identity, MultiLabelSet]]:
    """Cyclic association over every camera pair p < q, keeping pairs with psi > tau."""
    camera_pairs = list(combinations(range(1, dataset.M + 1), 2))
    directions = [d for p, q in camera_pairs for d in ((p, q), (q, p))]
    matrices = prediction_matrices(params, dataset, directions, max_workers=max_workers)

    pairs: set[AssociationPair] = set()
    for p, q in camera_pairs:
        kept = 0
        for k in range(1, dataset.label_space_sizes[p - 1] + 1):
            match = cyclic_pair(matrices[(p, q)], matrices[(q, p)], k)
            if match is not None and match[1] > tau:
                pairs.add(AssociationPair(p=p, k=k, q=q, l=match[0], psi=match[1]))
                kept += 1
        logger.debug("cameras (%d, %d): %d pairs above tau=%.4f", p, q, kept, tau)
    _check_partial_matching(pairs)
    return pairs, build_multilabels(dataset.identities(), pairs)


def _check_cycle(dataset: IcsDataset, camera_cycle: Sequence[int]) -> tuple[int, ...]:
    cycle = tuple(int(c) for c in camera_cycle)
    if len(set(cycle)) != len(cycle):
        raise ConfigError(f"camera cycle {list(cycle)} repeats a camera")
    if len(cycle) not in SUPPORTED_CYCLE_LENGTHS:
        raise ConfigError(f"cycle length {len(cycle)} not supported; use one of {SUPPORTED_CYCLE_LENGTHS}")
    if any(not 1 <= c <= dataset.M for c in cycle):
        raise ConfigError(f"camera cycle {list(cycle)} names cameras outside 1..{dataset.M}")
    return cycle


def _cycle_links(cycle: Sequence[int]) -> list[tuple[int, int]]:
    return [(cycle[i], cycle[(i + 1) % len(cycle)]) for i in range(len(cycle))]


def _walk_cycles(
    matrices: Mapping[tuple[int, int], PredictionMatrix], cycle: Sequence[int], n_first: int, tau: float
) -> set[CycleAssociation]:
    links = _cycle_links(cycle)
    found: set[CycleAssociation] = set()
    for k in range(1, n_first + 1):
        members = [(cycle[0], k)]
        current, degree = k, 1.0
        for source, target in links:
            current, prob = nominate(matrices[(source, target)], current)
            degree *= prob
            members.append((target, current))
        if current == k and degree > tau:
            found.add(CycleAssociation(members=tuple(members[:-1]), degree=degree))
    return found


def k_cycle_associate(
    params: ModelParams,
    dataset: IcsDataset,
    camera_cycle: Sequence[int],
    tau: float,
    *,
    max_workers: Optional[int] = None,
) -> set[CycleAssociation]:
    """Chain argmax nominations around ``camera_cycle`` and keep the closed cycles above tau."""
    cycle = _check_cycle(dataset, camera_cycle)
    matrices = prediction_matrices(params, dataset, _cycle_links(cycle), max_workers=max_workers)
    return _walk_cycles(matrices, cycle, dataset.label_space_sizes[cycle[0] - 1], tau)


def associate_cycles(
    params: ModelParams,
    dataset: IcsDataset,
    cycle_length: int,
    tau: float,
    *,
    max_workers: Optional[int] = None,
) -> tuple[set[AssociationPair], dict[Identity, MultiLabelSet]]:
    """Association over every ascending ``cycle_length``-camera combination.

    Length 2 is exactly ``associate_all``. Longer cycles are merged greedily by
    descending degree; a cycle is accepted only if it gives no identity a second,
    different label in some camera. Accepted cycles induce the returned pairs.
    """
    if cycle_length == 2:
        return associate_all(params, dataset, tau, max_workers=max_workers)
    if cycle_length not in SUPPORTED_CYCLE_LENGTHS:
        raise ConfigError(f"cycle length {cycle_length} not supported; use one of {SUPPORTED_CYCLE_LENGTHS}")
    if dataset.M < cycle_length:
        raise ConfigError(f"cycle length {cycle_length} needs at least {cycle_length} cameras, dataset has {dataset.M}")

    cycles = list(combinations(range(1, dataset.M + 1), cycle_length))
    directions = {link for cycle in cycles for link in _cycle_links(cycle)}
    matrices = prediction_matrices(params, dataset, directions, max_workers=max_workers)
    found: list[CycleAssociation] = []
    for cycle in cycles:
        found.extend(_walk_cycles(matrices, cycle, dataset.label_space_sizes[cycle[0] - 1], tau))
    found.sort(key=lambda item: (-item.degree, item.members))

    partner: dict[Identity, dict[int, int]] = {}
    pairs: dict[tuple[int, int, int, int], AssociationPair] = {}
    for item in found:
        consistent = all(
            partner.get(a, {}).get(b[0], b[1]) == b[1]
            for a in item.members
            for b in item.members
            if a != b
        )
        if not consistent:
            continue
        for a in item.members:
            for b in item.members:
                if a < b:
                    partner.setdefault(a, {})[b[0]] = b[1]
                    partner.setdefault(b, {})[a[0]] = a[1]
                    pair = AssociationPair.canonical(a, b, item.degree)
                    if pair.key not in pairs or pairs[pair.key].psi < item.degree:
                        pairs[pair.key] = pair
    accepted = set(pairs.values())
    _check_partial_matching(accepted)
    return accepted, build_multilabels(dataset.identities(), accepted)


def _shared_global_ids(mapping: Mapping[Identity, int], cameras: Sequence[int]) -> set[int]:
    per_camera = [{gid for (camera, _), gid in mapping.items() if camera == c} for c in cameras]
    return set.intersection(*per_camera) if per_camera else set()


def association_metrics(pairs: Iterable[AssociationPair], dataset: IcsDataset) -> AssociationReport:
    """Precision/recall of predicted pairs against identities sharing a hidden global id."""
    mapping = dataset.global_ids_by_identity()
    pairs = list(pairs)
    ground_truth = sum(
        len(_shared_global_ids(mapping, (p, q))) for p, q in combinations(range(1, dataset.M + 1), 2)
    )
    correct = sum(1 for pair in pairs if mapping.get((pair.p, pair.k)) == mapping.get((pair.q, pair.l)))
    return AssociationReport.from_counts(ground_truth, len(pairs), correct)


def cycle_metrics(
    tuples: Iterable[CycleAssociation], dataset: IcsDataset, camera_cycle: Sequence[int]
) -> AssociationReport:
    """Precision/recall of k-camera cycles; a true cycle is a person seen by every cycle camera."""
    cycle = _check_cycle(dataset, camera_cycle)
    mapping = dataset.global_ids_by_identity()
    tuples = list(tuples)
    correct = sum(1 for item in tuples if len({mapping[member] for member in item.members}) == 1)
    return AssociationReport.from_counts(len(_shared_global_ids(mapping, cycle)), len(tuples), correct)
