import importlib
import json

import pytest
import torch

from heightgen import HeightgenError, TrainingConfig, encoder_checksum, load_artifact, train
from tactiletex.dataset import generate_synthetic_corpus

# the package re-exports the train() function, shadowing the submodule attribute
training = importlib.import_module("heightgen.train")


def test_smoke_run_logs_one_entry_per_epoch(quick_result):
    assert len(quick_result.log) == 2
    assert [entry["epoch"] for entry in quick_result.log] == [1, 2]
    assert all(
        set(entry) == {"epoch", "train_loss", "test_mse"} for entry in quick_result.log
    )


def test_artifact_directory_layout(quick_result):
    d = quick_result.artifact_dir
    assert (d / "weights.pt").is_file()
    assert (d / "config.json").is_file()
    logged = [json.loads(line) for line in (d / "train_log.jsonl").read_text().splitlines()]
    assert logged == quick_result.log

    meta = json.loads((d / "config.json").read_text())
    assert meta["model_version"] == "heightgen-" + meta["weights_digest"][:12]
    assert meta["model_version"] == quick_result.model_version
    assert len(meta["data_digest"]) == 64


def test_single_epoch_run(pair_corpus, tmp_path):
    result = train(TrainingConfig(epochs=1, pretrain_epochs=0, seed=1), pair_corpus, tmp_path / "a")
    assert len(result.log) == 1


def test_encoder_is_bit_identical_after_training(quick_result):
    model, meta = load_artifact(quick_result.artifact_dir)
    assert encoder_checksum(model) == meta["encoder_checksum"]
    assert meta["encoder_checksum"] == quick_result.encoder_checksum


def test_loaded_artifact_reproduces_training_state(quick_result, pair_corpus):
    from heightgen.model import infer
    from tactiletex.heightfield import load_texture

    model, meta = load_artifact(quick_result.artifact_dir)
    texture = load_texture(pair_corpus.texture_path(pair_corpus.entries[0]))
    first = infer(model, texture, out_size=(64, 64))
    again, _ = load_artifact(quick_result.artifact_dir)
    second = infer(again, texture, out_size=(64, 64))
    assert (first.values == second.values).all()


def test_requires_split_manifest(tmp_path):
    manifest = generate_synthetic_corpus(tmp_path, entries_per_category=2, resolution=(64, 64), seed=1)
    with pytest.raises(HeightgenError, match="split"):
        train(TrainingConfig(epochs=1, pretrain_epochs=0), manifest, tmp_path / "out")


def test_load_rejects_tampered_weights(quick_result, tmp_path):
    import shutil

    copy = tmp_path / "tampered"
    shutil.copytree(quick_result.artifact_dir, copy)
    with open(copy / "weights.pt", "ab") as handle:
        handle.write(b"\x00")
    with pytest.raises(HeightgenError, match="digest"):
        load_artifact(copy)


def test_load_rejects_alien_schema(quick_result, tmp_path):
    import shutil

    copy = tmp_path / "alien"
    shutil.copytree(quick_result.artifact_dir, copy)
    meta = json.loads((copy / "config.json").read_text())
    meta["schema_version"] = 99
    (copy / "config.json").write_text(json.dumps(meta))
    with pytest.raises(HeightgenError, match="schema"):
        load_artifact(copy)


def test_load_rejects_missing_artifact(tmp_path):
    with pytest.raises(HeightgenError):
        load_artifact(tmp_path / "nope")


def test_nonfinite_loss_aborts_with_diagnostics(pair_corpus, tmp_path, monkeypatch):
    def poisoned(pred, target, w_mse, w_ssim):
        return torch.tensor(float("nan")), {"mse": float("nan"), "one_minus_ssim": 0.0}

    monkeypatch.setattr(training, "heightfield_loss", poisoned)
    with pytest.raises(HeightgenError, match="non-finite loss at epoch 1"):
        train(TrainingConfig(epochs=1, pretrain_epochs=0), pair_corpus, tmp_path / "x")
