from __future__ import annotations

import json
from dataclasses import replace
from itertools import combinations

import numpy as np
import pytest

from conftest import make_dataset
from mate_reid.config import SynthConfig
from mate_reid.data import annotation_cost, generate_synthetic, ics_transform, load_dataset, save_dataset
from mate_reid.data.synthetic import visible_identities
from mate_reid.errors import ConfigError, DataError
from mate_reid.schemas import IcsDataset, Sample
from mate_reid.utils import rng_stream


def test_generate_counts_with_full_reappearance():
    cfg = SynthConfig(num_cameras=2, num_identities=3, reappear_fraction=1.0, samples_per_identity_per_camera=2, test_identities=0)
    dataset = generate_synthetic(cfg)
    assert dataset.label_space_sizes == (3, 3)
    assert [len(samples) for samples in dataset.per_camera] == [6, 6]
    assert dataset.query == () and dataset.gallery == ()


def test_generate_is_deterministic(tiny_synth):
    assert generate_synthetic(tiny_synth) == generate_synthetic(tiny_synth)


def test_generate_subset_sizes_match_reference_rule():
    cfg = SynthConfig(num_cameras=4, num_identities=50, reappear_fraction=0.6, samples_per_identity_per_camera=8, seed=7)
    dataset = generate_synthetic(cfg)
    for p in range(1, 5):
        draws = rng_stream(7, "visible", p).random(50)
        expected = int(np.sum(draws < 0.6))
        assert dataset.label_space_sizes[p - 1] == expected
        assert len(dataset.per_camera[p - 1]) == expected * 8
        assert 10 <= expected <= 50


def test_camera_content_does_not_depend_on_other_cameras(tiny_synth):
    three = generate_synthetic(tiny_synth)
    four = generate_synthetic(tiny_synth.model_copy(update={"num_cameras": 4}))
    assert three.per_camera[0] == four.per_camera[0]
    assert list(visible_identities(tiny_synth, 2)) == list(visible_identities(tiny_synth.model_copy(update={"num_cameras": 4}), 2))


def test_generate_rejects_camera_without_two_identities():
    with pytest.raises(ConfigError):
        generate_synthetic(SynthConfig(reappear_fraction=0.0))


def test_test_split_is_cross_camera_and_disjoint(tiny_dataset):
    train_ids = {sample.id for sample in tiny_dataset.train_samples()}
    gallery = tiny_dataset.gallery
    assert tiny_dataset.query
    for query in tiny_dataset.query:
        assert query.id not in train_ids
        assert query.label == query.global_id
        assert any(item.global_id == query.global_id and item.camera != query.camera for item in gallery)
    train_gids = {sample.global_id for sample in tiny_dataset.train_samples()}
    assert train_gids.isdisjoint({sample.global_id for sample in tiny_dataset.query})


def test_ics_labels_partition_like_global_ids(tiny_dataset):
    for p, samples in enumerate(tiny_dataset.per_camera, start=1):
        by_label: dict[int, set[int]] = {}
        by_gid: dict[int, set[int]] = {}
        for sample in samples:
            by_label.setdefault(sample.label, set()).add(sample.id)
            by_gid.setdefault(sample.global_id, set()).add(sample.id)
        assert sorted(by_label) == list(range(1, tiny_dataset.label_space_sizes[p - 1] + 1))
        assert sorted(map(frozenset, by_label.values()), key=min) == sorted(map(frozenset, by_gid.values()), key=min)


def test_ics_transform_maps_sparse_ids_onto_contiguous_labels():
    globally_labelled = make_dataset([[(7, [0.0]), (9, [1.0]), (12, [2.0])], [(7, [0.5]), (9, [1.5])]])
    dataset = ics_transform(globally_labelled, seed=5)
    assert {sample.label for sample in dataset.per_camera[0]} == {1, 2, 3}
    assert {sample.global_id for sample in dataset.per_camera[0]} == {7, 9, 12}
    assert dataset.label_space_sizes == (3, 2)


def test_ics_transform_draws_each_camera_independently():
    entries = [(g, [float(g)]) for g in range(1, 9)]
    dataset = ics_transform(make_dataset([entries, entries]), seed=1)
    expected = [rng_stream(1, "ics", p).permutation(8) + 1 for p in (1, 2)]
    for p, samples in enumerate(dataset.per_camera):
        assert [sample.label for sample in samples] == list(expected[p])


def test_camera_labels_carry_no_functional_relation_across_seeds():
    relations = []
    for seed in (0, 1, 2):
        cfg = SynthConfig(
            num_cameras=3, num_identities=12, reappear_fraction=1.0, samples_per_identity_per_camera=1,
            test_identities=0, seed=seed,
        )
        label_of = [{s.global_id: s.label for s in samples} for samples in generate_synthetic(cfg).per_camera]
        for p, q in combinations(range(3), 2):
            # Camera-q label of the person holding camera-p label 1, 2, ...
            relations.append(tuple(label_of[q][g] for g in sorted(label_of[p], key=label_of[p].get)))
    assert tuple(range(1, 13)) not in relations
    assert len(set(relations)) == len(relations)


def test_dataset_round_trip_is_exact(tiny_dataset, tmp_path):
    path = save_dataset(tiny_dataset, tmp_path / "ds.jsonl")
    assert load_dataset(path) == tiny_dataset


def test_empty_test_split_round_trips(tmp_path):
    dataset = generate_synthetic(SynthConfig(num_cameras=2, num_identities=4, reappear_fraction=1.0, test_identities=0))
    assert load_dataset(save_dataset(dataset, tmp_path / "ds.jsonl")) == dataset


def _write_lines(path, *records):
    path.write_text("\n".join(r if isinstance(r, str) else json.dumps(r) for r in records) + "\n", encoding="utf-8")
    return path


HEADER = {"M": 1, "label_space_sizes": [2], "split": "train"}


def _sample(id, label, camera=1, x=(0.0, 1.0)):
    return {"id": id, "camera": camera, "label": label, "global_id": None, "x": list(x)}


def test_load_reports_malformed_line_number(tmp_path):
    path = _write_lines(tmp_path / "bad.jsonl", HEADER, _sample(1, 1), "{not json")
    with pytest.raises(DataError, match=r"bad.jsonl:3"):
        load_dataset(path)


def test_load_rejects_zero_camera(tmp_path):
    path = _write_lines(tmp_path / "cam0.jsonl", HEADER, _sample(1, 1, camera=0), _sample(2, 2))
    with pytest.raises(DataError, match="camera"):
        load_dataset(path)


def test_load_rejects_camera_above_m(tmp_path):
    path = _write_lines(tmp_path / "cam2.jsonl", HEADER, _sample(1, 1), _sample(2, 2, camera=2))
    with pytest.raises(DataError, match="camera 2 > M=1"):
        load_dataset(path)


def test_load_rejects_non_finite_components(tmp_path):
    path = _write_lines(tmp_path / "nan.jsonl", HEADER, _sample(1, 1), '{"id": 2, "camera": 1, "label": 2, "x": [NaN, 1.0]}')
    with pytest.raises(DataError, match=":3"):
        load_dataset(path)


def test_load_rejects_inconsistent_headers_and_missing_header(tmp_path):
    other = {"M": 1, "label_space_sizes": [3], "split": "query"}
    with pytest.raises(DataError, match="inconsistent"):
        load_dataset(_write_lines(tmp_path / "hdr.jsonl", HEADER, _sample(1, 1), _sample(2, 2), other))
    with pytest.raises(DataError, match="before any split header"):
        load_dataset(_write_lines(tmp_path / "nohdr.jsonl", _sample(1, 1)))


def test_load_requires_every_label_to_have_samples(tmp_path):
    header = {"M": 1, "label_space_sizes": [3], "split": "train"}
    path = _write_lines(tmp_path / "gap.jsonl", header, _sample(1, 1), _sample(2, 3))
    with pytest.raises(DataError, match="no samples"):
        load_dataset(path)
    assert load_dataset(path, require_contiguous_labels=False).M == 1


def test_validate_rejects_duplicate_ids():
    sample = Sample(id=1, x=(0.0,), camera=1, label=1)
    dataset = IcsDataset(per_camera=((sample, replace(sample, label=2)),), label_space_sizes=(2,))
    with pytest.raises(DataError, match="duplicate"):
        dataset.validate()


@pytest.mark.parametrize(
    ("n", "m", "expected"),
    [(50, 15, (37500, 37500, 562500)), (1, 1, (1, 1, 1)), (10, 2, (200, 200, 400))],
)
def test_annotation_cost_examples(n, m, expected):
    estimate = annotation_cost(n, m)
    assert (estimate.intra_total, estimate.inter_low, estimate.inter_high) == expected


def test_annotation_cost_formula_on_random_inputs():
    rng = np.random.default_rng(0)
    for n, m in rng.integers(1, 200, size=(20, 2)):
        n, m = int(n), int(m)
        estimate = annotation_cost(n, m)
        assert (estimate.intra_total, estimate.inter_low, estimate.inter_high) == (m * n * n, n * n * m, m * m * n * n)


def test_annotation_cost_rejects_non_positive():
    with pytest.raises(ConfigError):
        annotation_cost(0, 3)
