"""Corpus-level evaluation of heightfield generators.

Two pipelines share the same corpus. The tile study goes the long way
round: displace a reference tile with the groundtruth and the candidate
heightfields, re-extract both from the geometry, and compare what came
back. The image study skips the geometry and scores candidate
heightfields against the stored groundtruth directly. Both emit plain
JSON reports with no timestamps so identical inputs give identical bytes.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .dataset import DatasetManifest
from .displace import apply_heightfield, freeze_except_top
from .errors import DatasetError, TactiletexError
from .extract import extract_heightfield
from .generators import Generator, describe, generate
from .mesh import make_tile
from .metrics import mse, rms_roughness, ssim
from .stattests import Sample, games_howell, holm_correct, welch_anova, welch_t

REPORT_SCHEMA_VERSION = 1


def corpus_digest(manifest: DatasetManifest) -> str:
    """Content hash over entry metadata and referenced file bytes."""
    digest = hashlib.sha256()
    for entry in sorted(manifest.entries, key=lambda e: e.id):
        digest.update(f"{entry.id}\x00{entry.category}\x00{entry.split}\x00".encode())
        digest.update(manifest.texture_path(entry).read_bytes())
        digest.update(manifest.heightfield_path(entry).read_bytes())
    return digest.hexdigest()


def _selected(manifest: DatasetManifest, split: str | None):
    entries = manifest.entries if split is None else manifest.by_split(split)
    entries = sorted(entries, key=lambda e: e.id)
    if len(entries) < 2:
        raise DatasetError(
            f"need at least 2 entries to evaluate, found {len(entries)}"
            + (f" in split '{split}'" if split else "")
        )
    return entries


def _mean_sd(values: list[float]) -> dict:
    arr = np.asarray(values, dtype=np.float64)
    sd = float(np.std(arr, ddof=1)) if arr.size > 1 else 0.0
    return {"mean": float(np.mean(arr)), "sd": sd}


def run_formative(
    manifest: DatasetManifest,
    generator: Generator,
    split: str | None = None,
    tile_size_mm: tuple[float, float, float] = (50.0, 50.0, 10.0),
    target_faces: int = 25000,
    resolution: tuple[int, int] = (256, 256),
    amplitude_mm: float = 1.0,
    magnification: float = 1.0,
) -> dict:
    """Tile round-trip study of one generator against the groundtruth.

    The headline number is a Welch t test between the roughness of the
    candidate-displaced tiles and the groundtruth-displaced tiles, both
    measured after extraction from the geometry.
    """
    entries = _selected(manifest, split)
    tile = make_tile(size_mm=tile_size_mm, target_faces=target_faces)
    params = freeze_except_top(tile, amplitude_mm=amplitude_mm, magnification=magnification)

    records, failed = [], []
    rms_candidate, rms_groundtruth = [], []
    for entry in entries:
        try:
            truth = manifest.load_heightfield(entry)
            texture = manifest.load_texture(entry)
            candidate = generate(
                generator, texture, groundtruth=truth, size=(truth.width, truth.height)
            )
            displaced_truth = apply_heightfield(tile, truth, params)
            displaced_cand = apply_heightfield(tile, candidate, params)
            ext_truth = extract_heightfield(tile, displaced_truth, resolution=resolution)
            ext_cand = extract_heightfield(tile, displaced_cand, resolution=resolution)
        except TactiletexError as exc:
            failed.append({"id": entry.id, "error": str(exc)})
            continue
        rms_t = rms_roughness(ext_truth.heightfield)
        rms_c = rms_roughness(ext_cand.heightfield)
        rms_groundtruth.append(rms_t)
        rms_candidate.append(rms_c)
        records.append(
            {
                "id": entry.id,
                "category": entry.category,
                "rms_groundtruth": rms_t,
                "rms_candidate": rms_c,
                "rms_mm_groundtruth": ext_truth.stats.rms,
                "rms_mm_candidate": ext_cand.stats.rms,
                "mse": mse(ext_cand.heightfield, ext_truth.heightfield),
                "ssim": ssim(ext_cand.heightfield, ext_truth.heightfield),
            }
        )
    if len(records) < 2:
        raise DatasetError(f"only {len(records)} entries evaluated successfully")

    rms_test = welch_t(
        Sample("candidate", np.array(rms_candidate)),
        Sample("groundtruth", np.array(rms_groundtruth)),
    )
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "kind": "formative",
        "generator": describe(generator),
        "params": {
            "split": split,
            "tile_size_mm": list(tile_size_mm),
            "target_faces": target_faces,
            "resolution": list(resolution),
            "amplitude_mm": amplitude_mm,
            "magnification": magnification,
        },
        "n_entries": len(records),
        "n_failed": len(failed),
        "failed": failed,
        "entries": records,
        "rms_test": rms_test.to_dict(),
        "mse": _mean_sd([r["mse"] for r in records]),
        "ssim": _mean_sd([r["ssim"] for r in records]),
        "provenance": {"corpus_sha256": corpus_digest(manifest)},
    }


def run_technical_eval(
    manifest: DatasetManifest,
    candidates: dict[str, Generator],
    split: str | None = None,
) -> dict:
    """Image-space comparison of several generators on one corpus.

    Roughness groups (groundtruth plus one group per candidate) go
    through Welch's ANOVA and Games-Howell; per-entry MSE against the
    groundtruth is compared between candidate pairs with Welch t tests
    under Holm correction.
    """
    if len(candidates) < 2:
        raise DatasetError("technical evaluation needs at least 2 candidate generators")
    if "groundtruth" in candidates:
        raise DatasetError("candidate label 'groundtruth' is reserved")
    entries = _selected(manifest, split)
    labels = sorted(candidates)

    records, failed = [], []
    rms_truth: list[float] = []
    per_label: dict[str, dict[str, list[float]]] = {
        label: {"rms": [], "mse": [], "ssim": []} for label in labels
    }
    for entry in entries:
        try:
            truth = manifest.load_heightfield(entry)
            texture = manifest.load_texture(entry)
            results = {}
            for label in labels:
                field = generate(
                    candidates[label],
                    texture,
                    groundtruth=truth,
                    size=(truth.width, truth.height),
                )
                results[label] = {
                    "rms": rms_roughness(field),
                    "mse": mse(field, truth),
                    "ssim": ssim(field, truth),
                }
        except TactiletexError as exc:
            failed.append({"id": entry.id, "error": str(exc)})
            continue
        rms_truth.append(rms_roughness(truth))
        for label in labels:
            for key in ("rms", "mse", "ssim"):
                per_label[label][key].append(results[label][key])
        records.append(
            {
                "id": entry.id,
                "category": entry.category,
                "rms_groundtruth": rms_truth[-1],
                "candidates": results,
            }
        )
    if len(records) < 2:
        raise DatasetError(f"only {len(records)} entries evaluated successfully")

    rms_groups = [Sample("groundtruth", np.array(rms_truth))]
    rms_groups += [Sample(label, np.array(per_label[label]["rms"])) for label in labels]
    rms_anova = welch_anova(rms_groups)
    rms_posthoc = games_howell(rms_groups)

    mse_tests = []
    for i in range(len(labels)):
        for j in range(i + 1, len(labels)):
            a, b = labels[i], labels[j]
            result = welch_t(
                Sample(a, np.array(per_label[a]["mse"])),
                Sample(b, np.array(per_label[b]["mse"])),
            )
            mse_tests.append({"candidate_a": a, "candidate_b": b, "welch": result.to_dict()})
    adjusted = holm_correct([t["welch"]["p_value"] for t in mse_tests])
    for test, p in zip(mse_tests, adjusted):
        test["p_holm"] = p

    summary = {
        label: {key: _mean_sd(per_label[label][key]) for key in ("rms", "mse", "ssim")}
        for label in labels
    }
    summary["groundtruth"] = {"rms": _mean_sd(rms_truth)}
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "kind": "technical",
        "candidates": {label: describe(candidates[label]) for label in labels},
        "params": {"split": split},
        "n_entries": len(records),
        "n_failed": len(failed),
        "failed": failed,
        "entries": records,
        "rms_anova": rms_anova.to_dict(),
        "rms_posthoc": [entry.to_dict() for entry in rms_posthoc],
        "mse_tests": mse_tests,
        "summary": summary,
        "provenance": {"corpus_sha256": corpus_digest(manifest)},
    }


def write_report(report: dict, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return path


def load_report(path) -> dict:
    path = Path(path)
    report = json.loads(path.read_text())
    version = report.get("schema_version")
    if version != REPORT_SCHEMA_VERSION:
        raise DatasetError(f"{path}: unsupported report schema_version {version!r}")
    return report
