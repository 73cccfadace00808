"""Dataset manifests and synthetic texture/height corpora.

A dataset is a JSON manifest plus PNG files on disk. Manifest paths are
stored relative to the manifest's directory so the tree can be moved
wholesale. The synthetic corpus pairs smooth, band-limited heightfields
with high-contrast speckle textures whose luminance is uncorrelated with
the height data; that separation is what the evaluation pipeline's
directional checks lean on.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DatasetError
from .heightfield import (
    Heightfield,
    TextureImage,
    load_heightfield,
    load_texture,
    rotate90,
    rotate90_texture,
    save_heightfield,
    save_texture,
)

SCHEMA_VERSION = 1

SPLIT_NONE = ""
SPLIT_TRAIN = "train"
SPLIT_TEST = "test"
_SPLITS = (SPLIT_NONE, SPLIT_TRAIN, SPLIT_TEST)

FLAVORS = ("waves", "ridges", "blobs")


@dataclass(frozen=True)
class DatasetEntry:
    id: str
    category: str
    texture: str
    heightfield: str
    split: str = SPLIT_NONE

    def __post_init__(self):
        if not self.id:
            raise DatasetError("entry id must be non-empty")
        if self.split not in _SPLITS:
            raise DatasetError(f"entry '{self.id}': unknown split {self.split!r}")


@dataclass(frozen=True)
class DatasetManifest:
    root: Path
    entries: tuple

    def __post_init__(self):
        object.__setattr__(self, "root", Path(self.root))
        object.__setattr__(self, "entries", tuple(self.entries))
        seen = set()
        for e in self.entries:
            if e.id in seen:
                raise DatasetError(f"duplicate entry id '{e.id}'")
            seen.add(e.id)

    def __len__(self) -> int:
        return len(self.entries)

    def categories(self) -> list[str]:
        out = []
        for e in self.entries:
            if e.category not in out:
                out.append(e.category)
        return out

    def by_split(self, split: str) -> list[DatasetEntry]:
        return [e for e in self.entries if e.split == split]

    def texture_path(self, entry: DatasetEntry) -> Path:
        return self.root / entry.texture

    def heightfield_path(self, entry: DatasetEntry) -> Path:
        return self.root / entry.heightfield

    def load_texture(self, entry: DatasetEntry) -> TextureImage:
        return load_texture(self.texture_path(entry))

    def load_heightfield(self, entry: DatasetEntry) -> Heightfield:
        return load_heightfield(self.heightfield_path(entry))


def load_manifest(path) -> DatasetManifest:
    path = Path(path)
    try:
        payload = json.loads(path.read_text())
    except FileNotFoundError:
        raise DatasetError(f"manifest not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise DatasetError(f"{path}: invalid JSON ({exc})") from None
    version = payload.get("schema_version")
    if version != SCHEMA_VERSION:
        raise DatasetError(f"{path}: unsupported schema_version {version!r}")
    entries = []
    for i, raw in enumerate(payload.get("entries", [])):
        try:
            entries.append(
                DatasetEntry(
                    id=raw["id"],
                    category=raw["category"],
                    texture=raw["texture"],
                    heightfield=raw["heightfield"],
                    split=raw.get("split", SPLIT_NONE),
                )
            )
        except KeyError as exc:
            raise DatasetError(f"{path}: entry {i} missing field {exc}") from None
    return DatasetManifest(root=path.parent, entries=entries)


def save_manifest(manifest: DatasetManifest, path) -> Path:
    path = Path(path)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "entries": [
            {
                "id": e.id,
                "category": e.category,
                "texture": e.texture,
                "heightfield": e.heightfield,
                "split": e.split,
            }
            for e in manifest.entries
        ],
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2) + "\n")
    return path


def assign_split(manifest: DatasetManifest, train_fraction: float = 0.9, seed: int = 42) -> DatasetManifest:
    """Stratified train/test assignment, shuffled per category.

    Each category contributes floor(n * train_fraction) training entries.
    """
    if not (0.0 < train_fraction < 1.0):
        raise DatasetError(f"train_fraction must be in (0, 1), got {train_fraction}")
    rng = np.random.default_rng(seed)
    split_of: dict[str, str] = {}
    for category in manifest.categories():
        ids = [e.id for e in manifest.entries if e.category == category]
        order = rng.permutation(len(ids))
        n_train = int(np.floor(len(ids) * train_fraction))
        if n_train == 0:
            warnings.warn(f"category '{category}' has no training entries", stacklevel=2)
        if n_train == len(ids):
            warnings.warn(f"category '{category}' has no test entries", stacklevel=2)
        for rank, idx in enumerate(order):
            split_of[ids[idx]] = SPLIT_TRAIN if rank < n_train else SPLIT_TEST
    entries = [replace(e, split=split_of[e.id]) for e in manifest.entries]
    return DatasetManifest(root=manifest.root, entries=entries)


def _rotated_name(rel: str, degrees: int) -> str:
    p = Path(rel)
    return str(p.with_name(f"{p.stem}_rot{degrees}{p.suffix}"))


def augment_rotations(manifest: DatasetManifest, splits: Sequence[str] = (SPLIT_TRAIN,)) -> DatasetManifest:
    """Add 90/180/270 degree rotations of every entry in the given splits.

    Rotated PNGs are written next to their sources; each source entry ends
    up as four manifest entries (itself plus three rotations).
    """
    existing = {e.id for e in manifest.entries}
    out = []
    for entry in manifest.entries:
        out.append(entry)
        if entry.split not in splits:
            continue
        texture = manifest.load_texture(entry)
        height = manifest.load_heightfield(entry)
        for turns in (1, 2, 3):
            degrees = 90 * turns
            new_id = f"{entry.id}_rot{degrees}"
            if new_id in existing:
                raise DatasetError(f"augmentation would duplicate id '{new_id}'")
            existing.add(new_id)
            tex_rel = _rotated_name(entry.texture, degrees)
            hf_rel = _rotated_name(entry.heightfield, degrees)
            save_texture(rotate90_texture(texture, turns), manifest.root / tex_rel)
            save_heightfield(rotate90(height, turns), manifest.root / hf_rel, depth=height.source_depth)
            out.append(
                DatasetEntry(
                    id=new_id,
                    category=entry.category,
                    texture=tex_rel,
                    heightfield=hf_rel,
                    split=entry.split,
                )
            )
    return DatasetManifest(root=manifest.root, entries=out)


# ---------------------------------------------------------------------------
# Synthetic corpus


def _pixel_grid(resolution: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
    width, height = resolution
    u = (np.arange(width, dtype=np.float64) + 0.5) / width
    v = (np.arange(height, dtype=np.float64) + 0.5) / height
    return np.meshgrid(u, v)


def synthetic_heightfield(resolution=(256, 256), seed: int = 0, flavor: str = "waves") -> Heightfield:
    """Smooth random field, min-max normalized to the full [0, 1] range.

    Spatial frequencies stay below ~5 cycles per tile so the field
    survives a round trip through vertex sampling and re-rasterization.
    """
    if flavor not in FLAVORS:
        raise DatasetError(f"unknown flavor {flavor!r}, expected one of {FLAVORS}")
    rng = np.random.default_rng(seed)
    uu, vv = _pixel_grid(resolution)
    field = np.zeros_like(uu)
    if flavor in ("waves", "ridges"):
        for _ in range(8):
            if flavor == "waves":
                fx = rng.uniform(0.5, 4.0) * rng.choice([-1.0, 1.0])
                fy = rng.uniform(0.5, 4.0) * rng.choice([-1.0, 1.0])
            else:
                fx = rng.uniform(2.0, 5.0) * rng.choice([-1.0, 1.0])
                fy = rng.uniform(0.2, 1.0) * rng.choice([-1.0, 1.0])
            amplitude = rng.uniform(0.4, 1.0)
            phase = rng.uniform(0.0, 2.0 * np.pi)
            field += amplitude * np.cos(2.0 * np.pi * (fx * uu + fy * vv) + phase)
    else:
        for _ in range(6):
            cx, cy = rng.uniform(0.1, 0.9, size=2)
            sigma = rng.uniform(0.08, 0.2)
            amplitude = rng.uniform(0.4, 1.0) * rng.choice([-1.0, 1.0])
            field += amplitude * np.exp(-((uu - cx) ** 2 + (vv - cy) ** 2) / (2.0 * sigma**2))
    lo, hi = float(field.min()), float(field.max())
    if hi - lo < 1e-12:
        raise DatasetError("synthetic field degenerated to a constant")
    return Heightfield((field - lo) / (hi - lo), source_depth=16)


def synthetic_texture(resolution=(256, 256), seed: int = 0, rms: float = 0.35) -> TextureImage:
    """Gray two-level speckle whose luminance RMS is exactly rms."""
    if not (0.0 < rms <= 0.5):
        raise DatasetError(f"texture rms must be in (0, 0.5], got {rms}")
    rng = np.random.default_rng(seed)
    width, height = resolution
    mask = rng.integers(0, 2, size=(height, width)).astype(np.float64)
    gray = 0.5 + rms * (2.0 * mask - 1.0)
    # keep the two levels exactly representable at 8 bits so the RMS
    # survives the PNG round trip
    gray = np.round(gray * 255.0) / 255.0
    rgb = np.repeat(gray[:, :, None], 3, axis=2)
    return TextureImage(rgb)


def _centered_rms(values: np.ndarray) -> float:
    return float(np.sqrt(np.mean((values - values.mean()) ** 2)))


def generate_synthetic_corpus(
    out_dir,
    entries_per_category: int = 8,
    resolution=(256, 256),
    seed: int = 42,
    categories: Sequence[str] = FLAVORS,
) -> DatasetManifest:
    """Write a paired texture/heightfield corpus plus manifest.json.

    Every entry satisfies: heightfield RMS in [0.12, 0.28], texture
    luminance RMS in [0.32, 0.38], |correlation(luminance, height)| < 0.3.
    The disjoint RMS bands give downstream comparisons a known direction.
    """
    from .heightfield import luminance
    from .metrics import pearson_r

    if entries_per_category < 1:
        raise DatasetError("entries_per_category must be >= 1")
    unknown = [c for c in categories if c not in FLAVORS]
    if unknown:
        raise DatasetError(f"unknown categories: {unknown}")
    out_dir = Path(out_dir)
    (out_dir / "textures").mkdir(parents=True, exist_ok=True)
    (out_dir / "heights").mkdir(parents=True, exist_ok=True)

    rng = np.random.default_rng(seed)
    entries = []
    for category in categories:
        for i in range(entries_per_category):
            entry_id = f"{category}_{i:03d}"
            for attempt in range(20):
                sub = int(rng.integers(0, 2**31))
                height = synthetic_heightfield(resolution, seed=sub, flavor=category)
                h_rms = _centered_rms(height.values)
                if not (0.12 <= h_rms <= 0.28):
                    continue
                texture = synthetic_texture(
                    resolution, seed=sub + 1, rms=float(rng.uniform(0.32, 0.38))
                )
                if abs(pearson_r(luminance(texture), height)) >= 0.3:
                    continue
                break
            else:
                raise DatasetError(f"could not synthesize entry '{entry_id}' within 20 attempts")
            tex_rel = f"textures/{entry_id}.png"
            hf_rel = f"heights/{entry_id}.png"
            save_texture(texture, out_dir / tex_rel)
            save_heightfield(height, out_dir / hf_rel, depth=16)
            entries.append(
                DatasetEntry(id=entry_id, category=category, texture=tex_rel, heightfield=hf_rel)
            )
    manifest = DatasetManifest(root=out_dir, entries=entries)
    save_manifest(manifest, out_dir / "manifest.json")
    return manifest
