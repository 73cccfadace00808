from __future__ import annotations

import json

import numpy as np
import pytest

from tactiletex.dataset import (
    FLAVORS,
    SPLIT_TEST,
    SPLIT_TRAIN,
    DatasetEntry,
    DatasetManifest,
    assign_split,
    augment_rotations,
    generate_synthetic_corpus,
    load_manifest,
    save_manifest,
    synthetic_heightfield,
    synthetic_texture,
)
from tactiletex.errors import DatasetError
from tactiletex.heightfield import load_heightfield, load_texture, luminance, rotate90
from tactiletex.metrics import pearson_r, rms_roughness


# ---------------------------------------------------------------------------
# synthesis primitives


def test_synthetic_heightfield_spans_unit_range():
    for flavor in FLAVORS:
        h = synthetic_heightfield((64, 48), seed=5, flavor=flavor)
        assert (h.width, h.height) == (64, 48)
        assert h.values.min() == 0.0
        assert h.values.max() == 1.0


def test_synthetic_heightfield_deterministic():
    a = synthetic_heightfield((32, 32), seed=9, flavor="ridges")
    b = synthetic_heightfield((32, 32), seed=9, flavor="ridges")
    np.testing.assert_array_equal(a.values, b.values)
    c = synthetic_heightfield((32, 32), seed=10, flavor="ridges")
    assert np.any(a.values != c.values)


def test_synthetic_heightfield_flavors_differ():
    fields = [synthetic_heightfield((32, 32), seed=4, flavor=f) for f in FLAVORS]
    for i in range(len(fields)):
        for j in range(i + 1, len(fields)):
            assert np.any(fields[i].values != fields[j].values)


def test_synthetic_heightfield_unknown_flavor():
    with pytest.raises(DatasetError):
        synthetic_heightfield((32, 32), seed=0, flavor="granite")


def test_synthetic_texture_hits_requested_rms():
    for rms in (0.32, 0.35, 0.38):
        t = synthetic_texture((64, 64), seed=2, rms=rms)
        got = rms_roughness(luminance(t))
        assert got == pytest.approx(rms, abs=0.01)


def test_synthetic_texture_is_binary_speckle():
    t = synthetic_texture((32, 32), seed=1, rms=0.35)
    assert len(np.unique(np.round(t.rgb, 6))) == 2


# ---------------------------------------------------------------------------
# corpus generation


def test_corpus_satisfies_constraint_bands(small_corpus):
    assert len(small_corpus.entries) == 9
    assert set(small_corpus.categories()) == set(FLAVORS)
    for entry in small_corpus.entries:
        height = load_heightfield(small_corpus.heightfield_path(entry))
        texture = load_texture(small_corpus.texture_path(entry))
        assert 0.12 <= rms_roughness(height) <= 0.28
        assert 0.32 <= rms_roughness(luminance(texture)) <= 0.38
        assert abs(pearson_r(luminance(texture), height)) < 0.3


def test_corpus_rms_bands_are_disjoint(small_corpus):
    # texture luminance is always rougher than the paired height grid
    for entry in small_corpus.entries:
        height = load_heightfield(small_corpus.heightfield_path(entry))
        texture = load_texture(small_corpus.texture_path(entry))
        assert rms_roughness(luminance(texture)) > rms_roughness(height)


def test_corpus_is_deterministic(tmp_path):
    a = generate_synthetic_corpus(tmp_path / "a", entries_per_category=2, resolution=(32, 32), seed=3)
    b = generate_synthetic_corpus(tmp_path / "b", entries_per_category=2, resolution=(32, 32), seed=3)
    assert [e.id for e in a.entries] == [e.id for e in b.entries]
    for ea, eb in zip(a.entries, b.entries):
        assert (a.root / ea.texture).read_bytes() == (b.root / eb.texture).read_bytes()
        assert (a.root / ea.heightfield).read_bytes() == (b.root / eb.heightfield).read_bytes()


def test_corpus_writes_loadable_manifest(small_corpus):
    manifest_path = small_corpus.root / "manifest.json"
    assert manifest_path.exists()
    loaded = load_manifest(manifest_path)
    assert [e.id for e in loaded.entries] == [e.id for e in small_corpus.entries]


def test_corpus_rejects_bad_parameters(tmp_path):
    with pytest.raises(DatasetError):
        generate_synthetic_corpus(tmp_path / "x", entries_per_category=0)
    with pytest.raises(DatasetError):
        generate_synthetic_corpus(tmp_path / "y", categories=("marble",))


# ---------------------------------------------------------------------------
# manifest io


def test_manifest_round_trip(tmp_path, small_corpus):
    path = tmp_path / "copy.json"
    save_manifest(small_corpus, path)
    loaded = load_manifest(path)
    assert [e.id for e in loaded.entries] == [e.id for e in small_corpus.entries]
    assert loaded.root == tmp_path


def test_manifest_paths_are_relative(small_corpus):
    payload = json.loads((small_corpus.root / "manifest.json").read_text())
    for entry in payload["entries"]:
        assert not entry["texture"].startswith("/")
        assert "\\" not in entry["texture"]


def test_load_manifest_missing_file(tmp_path):
    with pytest.raises(DatasetError):
        load_manifest(tmp_path / "nope.json")


def test_load_manifest_rejects_alien_schema(tmp_path):
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps({"schema_version": 99, "entries": []}))
    with pytest.raises(DatasetError):
        load_manifest(path)


def test_manifest_rejects_duplicate_ids(tmp_path):
    entry = DatasetEntry(id="a", category="waves", texture="t.png", heightfield="h.png")
    with pytest.raises(DatasetError):
        DatasetManifest(root=tmp_path, entries=[entry, entry])


# ---------------------------------------------------------------------------
# splits


def test_assign_split_is_stratified(small_corpus):
    split = assign_split(small_corpus, train_fraction=2 / 3, seed=0)
    for category in split.categories():
        entries = [e for e in split.entries if e.category == category]
        trains = [e for e in entries if e.split == SPLIT_TRAIN]
        assert len(trains) == 2  # floor(3 * 2/3)
    assert len(split.by_split(SPLIT_TRAIN)) + len(split.by_split(SPLIT_TEST)) == 9


def test_assign_split_deterministic(small_corpus):
    a = assign_split(small_corpus, train_fraction=0.9, seed=42)
    b = assign_split(small_corpus, train_fraction=0.9, seed=42)
    assert [e.split for e in a.entries] == [e.split for e in b.entries]


def test_assign_split_warns_on_empty_side(small_corpus):
    # 3 entries per category, floor(3 * 0.1) = 0 training entries
    with pytest.warns(UserWarning):
        out = assign_split(small_corpus, train_fraction=0.1, seed=0)
    assert len(out.by_split(SPLIT_TRAIN)) == 0


def test_assign_split_validates_fraction(small_corpus):
    for bad in (0.0, 1.0, 1.5, -0.1):
        with pytest.raises(DatasetError):
            assign_split(small_corpus, train_fraction=bad)


# ---------------------------------------------------------------------------
# rotation augmentation


@pytest.fixture()
def split_corpus(tmp_path):
    manifest = generate_synthetic_corpus(
        tmp_path, entries_per_category=2, resolution=(32, 32), seed=13, categories=("waves",)
    )
    return assign_split(manifest, train_fraction=0.5, seed=1)


def test_augment_adds_three_rotations_per_train_entry(split_corpus):
    n_train = len(split_corpus.by_split(SPLIT_TRAIN))
    n_test = len(split_corpus.by_split(SPLIT_TEST))
    out = augment_rotations(split_corpus)
    assert len(out.entries) == len(split_corpus.entries) + 3 * n_train
    assert len(out.by_split(SPLIT_TEST)) == n_test  # untouched


def test_augment_pixels_match_quarter_turns(split_corpus):
    out = augment_rotations(split_corpus)
    base = split_corpus.by_split(SPLIT_TRAIN)[0]
    height = load_heightfield(split_corpus.heightfield_path(base))
    for turns, suffix in ((1, "_rot90"), (2, "_rot180"), (3, "_rot270")):
        rotated_entry = next(e for e in out.entries if e.id == base.id + suffix)
        rotated = load_heightfield(out.heightfield_path(rotated_entry))
        np.testing.assert_array_equal(rotated.values, rotate90(height, turns).values)
        assert rotated_entry.split == SPLIT_TRAIN
        assert rotated_entry.category == base.category


def test_augment_twice_collides(split_corpus):
    out = augment_rotations(split_corpus)
    with pytest.raises(DatasetError):
        augment_rotations(out)
