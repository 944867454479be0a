from __future__ import annotations

from dataclasses import replace
from itertools import combinations

import numpy as np
import pytest

from conftest import identity_params, make_dataset, random_params
from mate_reid.assoc import (
    associate_all,
    associate_cycles,
    association_metrics,
    cross_camera_prediction,
    curriculum_threshold,
    cycle_metrics,
    cyclic_pair,
    k_cycle_associate,
    nominate,
)
from mate_reid.config import CurriculumSchedule
from mate_reid.errors import ConfigError
from mate_reid.net import ModelParams, encode, softmax
from mate_reid.schemas import AssociationPair, AssociationReport, IcsDataset, PredictionMatrix


def _matrix(rows, source=1, target=2) -> PredictionMatrix:
    return PredictionMatrix(source=source, target=target, matrix=np.asarray(rows, dtype=np.float64))


def test_cross_camera_prediction_averages_image_distributions():
    # Camera-2 head logits [ln 7, ln 3] and [0, 0] give [0.7, 0.3] and [0.5, 0.5].
    head = np.array([[1.0, 0.0], [0.0, 1.0]])
    params = identity_params(2, [2, 2], heads=[head, head])
    dataset = make_dataset(
        [
            [(1, [np.log(7.0), np.log(3.0)]), (1, [0.0, 0.0]), (2, [5.0, 0.0])],
            [(1, [0.0, 0.0]), (2, [0.0, 1.0])],
        ]
    )
    m = cross_camera_prediction(params, dataset, 1, 2)
    assert m.shape == (2, 2)
    assert m.row(1) == pytest.approx([0.6, 0.4])
    assert np.allclose(m.matrix.sum(axis=1), 1.0, atol=1e-6)


def test_cross_camera_prediction_matches_per_image_loop(two_camera_dataset):
    params = random_params(3, 5, [3, 3])
    m = cross_camera_prediction(params, two_camera_dataset, 2, 1)
    for k in (1, 2, 3):
        images = [s for s in two_camera_dataset.per_camera[1] if s.label == k]
        expected = sum(softmax(params.heads[0] @ encode(params, s.x)) for s in images) / len(images)
        assert np.allclose(m.row(k), expected, atol=1e-12)


def test_cross_camera_prediction_rejects_same_camera(two_camera_dataset):
    with pytest.raises(ValueError):
        cross_camera_prediction(random_params(0, 5, [3, 3]), two_camera_dataset, 1, 1)


def test_nominate_examples():
    assert nominate(_matrix([[0.2, 0.5, 0.3]]), 1) == (2, 0.5)
    assert nominate(_matrix([[0.5, 0.5]]), 1) == (1, 0.5)
    row = np.random.default_rng(0).random(7)
    best = max(range(7), key=lambda j: (row[j], -j))
    assert nominate(_matrix([row]), 1)[0] == best + 1


def test_cyclic_pair_hand_example():
    m_pq = _matrix([[0.9, 0.1], [0.2, 0.8]])
    m_qp = _matrix([[0.85, 0.15], [0.3, 0.7]], source=2, target=1)
    l1, psi1 = cyclic_pair(m_pq, m_qp, 1)
    l2, psi2 = cyclic_pair(m_pq, m_qp, 2)
    assert (l1, l2) == (1, 2)
    assert psi1 == pytest.approx(0.765)
    assert psi2 == pytest.approx(0.56)


def test_cyclic_pair_rejects_broken_cycle():
    assert cyclic_pair(_matrix([[1.0, 0.0], [0.0, 1.0]]), _matrix([[0.0, 1.0], [1.0, 0.0]]), 1) is None


def test_cyclic_pair_on_permutation_matrices():
    perm = np.eye(4)[[2, 0, 3, 1]]
    for k in range(1, 5):
        l, psi = cyclic_pair(_matrix(perm), _matrix(perm.T), k)
        assert perm[k - 1, l - 1] == 1.0
        assert psi == 1.0


def test_curriculum_threshold_examples():
    sched = CurriculumSchedule(tau_lower=0.5, tau_upper=0.95, rounds=10)
    assert curriculum_threshold(sched, 0) == pytest.approx(0.5, abs=1e-9)
    assert curriculum_threshold(sched, 5) == pytest.approx(0.5 + 5 / 9 * 0.5, abs=1e-9)
    assert curriculum_threshold(sched, 9) == pytest.approx(0.95, abs=1e-9)
    values = [curriculum_threshold(sched, r) for r in range(10)]
    assert values == sorted(values)
    assert curriculum_threshold(CurriculumSchedule(tau_lower=0.3, tau_upper=0.9, rounds=1), 0) == 0.3
    with pytest.raises(ValueError):
        curriculum_threshold(sched, 10)


def _brute_force_pairs(params, dataset, tau):
    """Straight enumeration: per-image softmax means, argmax both ways, product test."""
    pairs = set()
    for p, q in combinations(range(1, dataset.M + 1), 2):
        def mean_dist(source, target, k):
            images = [s for s in dataset.per_camera[source - 1] if s.label == k]
            total = np.zeros(dataset.label_space_sizes[target - 1])
            for s in images:
                logits = params.heads[target - 1] @ encode(params, s.x)
                e = np.exp(logits - logits.max())
                total += e / e.sum()
            return total / len(images)

        for k in range(1, dataset.label_space_sizes[p - 1] + 1):
            forward = mean_dist(p, q, k)
            l = int(np.argmax(forward)) + 1
            backward = mean_dist(q, p, l)
            if int(np.argmax(backward)) + 1 == k and forward[l - 1] * backward[k - 1] > tau:
                pairs.add((p, k, q, l))
    return pairs


@pytest.mark.parametrize("seed", range(5))
def test_associate_all_matches_brute_force(two_camera_dataset, seed):
    params = random_params(seed, 5, [3, 3], feature_dim=4)
    params.heads[0] *= 4.0
    params.heads[1] *= 4.0
    pairs, labels = associate_all(params, two_camera_dataset, 0.0)
    assert {pair.key for pair in pairs} == _brute_force_pairs(params, two_camera_dataset, 0.0)
    for owner, label_set in labels.items():
        assert 1 <= len(label_set.labels) <= two_camera_dataset.M
        assert owner in label_set.labels


def test_associate_all_threshold_one_gives_singletons(tiny_dataset):
    params = random_params(0, tiny_dataset.input_dim, tiny_dataset.label_space_sizes)
    pairs, labels = associate_all(params, tiny_dataset, 1.0)
    assert pairs == set()
    assert all(len(label_set.labels) == 1 for label_set in labels.values())


def test_associate_all_is_monotone_in_tau_and_a_partial_matching(tiny_dataset):
    rng = np.random.default_rng(0)
    for trial in range(20):
        params = random_params(trial, tiny_dataset.input_dim, tiny_dataset.label_space_sizes)
        for head in params.heads:
            head *= rng.uniform(1.0, 10.0)
        previous = None
        for tau in (0.9, 0.5, 0.2, 0.0):
            pairs, _ = associate_all(params, tiny_dataset, tau, max_workers=2)
            if previous is not None:
                assert previous <= pairs
            previous = pairs
            for p, q in combinations(range(1, tiny_dataset.M + 1), 2):
                between = [pair for pair in pairs if (pair.p, pair.q) == (p, q)]
                assert len({pair.k for pair in between}) == len(between)
                assert len({pair.l for pair in between}) == len(between)


def test_associate_all_is_symmetric_in_camera_roles(tiny_dataset):
    m = tiny_dataset.M
    swapped = IcsDataset(
        per_camera=tuple(
            tuple(replace(sample, camera=m + 1 - sample.camera) for sample in samples)
            for samples in reversed(tiny_dataset.per_camera)
        ),
        label_space_sizes=tuple(reversed(tiny_dataset.label_space_sizes)),
    )
    for seed in range(5):
        params = random_params(seed, tiny_dataset.input_dim, tiny_dataset.label_space_sizes)
        for head in params.heads:
            head *= 8.0
        reversed_params = ModelParams(encoder_layers=params.encoder_layers, heads=list(reversed(params.heads)))
        pairs, _ = associate_all(params, tiny_dataset, 0.3)
        mirrored, _ = associate_all(reversed_params, swapped, 0.3)
        assert {(m + 1 - pair.q, pair.l, m + 1 - pair.p, pair.k, pair.psi) for pair in pairs} == {
            (pair.p, pair.k, pair.q, pair.l, pair.psi) for pair in mirrored
        }


def test_perfect_model_recovers_ground_truth():
    # Features are one-hot global ids; every camera head maps its ids exactly.
    gids = [[1, 2, 3], [2, 3, 4]]
    cameras = [[(k + 1, np.eye(4)[g - 1]) for k, g in enumerate(ids)] for ids in gids]
    dataset = make_dataset(cameras, global_ids=gids)
    heads = [np.stack([40.0 * np.eye(4)[g - 1] for g in ids]) for ids in gids]
    params = identity_params(4, [3, 3], heads=heads)
    pairs, labels = associate_all(params, dataset, 0.5)
    assert {pair.key for pair in pairs} == {(1, 2, 2, 1), (1, 3, 2, 2)}
    report = association_metrics(pairs, dataset)
    assert (report.precision, report.recall, report.ground_truth_pairs) == (1.0, 1.0, 2)
    assert labels[(1, 2)].labels == frozenset({(1, 2), (2, 1)})


def test_association_report_conventions():
    assert AssociationReport.from_counts(1, 1, 1).precision == 1.0
    report = AssociationReport.from_counts(4, 2, 1)
    assert (report.precision, report.recall) == (0.5, 0.25)
    empty = AssociationReport.from_counts(3, 0, 0)
    assert (empty.precision, empty.recall) == (1.0, 0.0)


def test_association_pair_requires_ordered_cameras():
    with pytest.raises(ValueError):
        AssociationPair(p=2, k=1, q=1, l=1, psi=0.9)
    assert AssociationPair.canonical((3, 1), (1, 2), 0.5).key == (1, 2, 3, 1)


def _cycle_dataset(m: int):
    """Each camera sees global ids 1..3 under a shifted local labelling."""
    cameras, gids = [], []
    for p in range(m):
        ids = [(k + p) % 3 + 1 for k in range(3)]
        cameras.append([(k + 1, np.eye(3)[g - 1]) for k, g in enumerate(ids)])
        gids.append(ids)
    dataset = make_dataset(cameras, global_ids=gids)
    heads = [np.stack([50.0 * np.eye(3)[g - 1] for g in ids]) for ids in gids]
    return dataset, identity_params(3, [3] * m, heads=heads)


def test_k_cycle_perfect_three_cycle():
    dataset, params = _cycle_dataset(3)
    cycles = k_cycle_associate(params, dataset, [1, 2, 3], 0.9)
    assert len(cycles) == 3
    assert all(item.degree > 0.9 for item in cycles)
    report = cycle_metrics(cycles, dataset, [1, 2, 3])
    assert (report.precision, report.recall) == (1.0, 1.0)


def test_two_cycle_equals_pairwise_association(two_camera_dataset):
    params = random_params(1, 5, [3, 3])
    for head in params.heads:
        head *= 5.0
    cycles = k_cycle_associate(params, two_camera_dataset, [1, 2], 0.0)
    pairs, _ = associate_all(params, two_camera_dataset, 0.0)
    assert {(c.members[0][1], c.members[1][1]) for c in cycles} == {(pair.k, pair.l) for pair in pairs}


def test_associate_cycles_merges_consistent_tuples():
    dataset, params = _cycle_dataset(4)
    pairs, labels = associate_cycles(params, dataset, 3, 0.5)
    assert association_metrics(pairs, dataset).precision == 1.0
    assert all(len(label_set.labels) == 4 for label_set in labels.values())
    two, _ = associate_cycles(params, dataset, 2, 0.5)
    assert two == associate_all(params, dataset, 0.5)[0]


def test_cycle_validation_errors(two_camera_dataset):
    params = random_params(0, 5, [3, 3])
    with pytest.raises(ConfigError):
        associate_cycles(params, two_camera_dataset, 3, 0.5)
    with pytest.raises(ConfigError):
        k_cycle_associate(params, two_camera_dataset, [1, 1], 0.5)
    with pytest.raises(ConfigError):
        associate_cycles(params, two_camera_dataset, 5, 0.5)
