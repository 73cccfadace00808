"""Recover a heightfield from a displaced mesh by differencing its reference.

The "boolean difference" of the original pipeline is realized as
matched-topology vertex differencing projected on the original normals,
rasterized into UV space, then min-max mapped to [0, 1] (the grayscale
0-255 convention, normalized). Raw millimeter statistics are kept
alongside so physical comparisons stay possible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import ndimage

from .errors import MeshError
from .heightfield import Heightfield
from .mesh import ACTIVE_GROUP, TriMesh

_DEGENERATE_RANGE_MM = 1e-12


@dataclass(frozen=True)
class DisplacementStats:
    """Signed normal displacement statistics over active vertices, in mm.

    rms is mean-centered (Rq convention), so a constant offset has rms 0.
    """

    min: float
    max: float
    mean: float
    rms: float

    def to_dict(self) -> dict:
        return {"min": self.min, "max": self.max, "mean": self.mean, "rms": self.rms}


@dataclass(frozen=True)
class ExtractionResult:
    heightfield: Heightfield
    stats: DisplacementStats
    coverage: float  # fraction of pixels covered by rasterized triangles


def _check_matched(original: TriMesh, modified: TriMesh) -> None:
    if original.vertex_count != modified.vertex_count or original.face_count != modified.face_count:
        raise MeshError(
            "topology mismatch: "
            f"{original.vertex_count}v/{original.face_count}f vs "
            f"{modified.vertex_count}v/{modified.face_count}f"
        )
    if not np.array_equal(original.faces, modified.faces):
        raise MeshError("topology mismatch: face indices differ")


def _active_elements(mesh: TriMesh) -> Tuple[np.ndarray, np.ndarray]:
    """(face indices, vertex indices) of the stylizable region; all if unlabeled."""
    if mesh.face_groups is not None and ACTIVE_GROUP in mesh.face_groups:
        faces = mesh.face_groups[ACTIVE_GROUP]
        return faces, np.unique(mesh.faces[faces])
    return np.arange(mesh.face_count, dtype=np.int64), np.arange(mesh.vertex_count, dtype=np.int64)


def normal_displacements(original: TriMesh, modified: TriMesh) -> np.ndarray:
    """Per-vertex signed displacement along the original normals, in mm."""
    _check_matched(original, modified)
    return np.einsum("ij,ij->i", modified.vertices - original.vertices, original.normals)


def raw_displacement_stats(original: TriMesh, modified: TriMesh) -> DisplacementStats:
    """min/max/mean and mean-centered RMS of active-vertex displacements."""
    d = normal_displacements(original, modified)[_active_elements(original)[1]]
    centered = d - d.mean()
    return DisplacementStats(
        min=float(d.min()),
        max=float(d.max()),
        mean=float(d.mean()),
        rms=float(np.sqrt(np.mean(centered**2))),
    )


def extract_heightfield(
    original: TriMesh,
    modified: TriMesh,
    resolution: Tuple[int, int] = (256, 256),
) -> ExtractionResult:
    """Rasterize per-vertex displacements into a normalized heightfield.

    Active triangles are rendered in UV space with barycentric
    interpolation; pixels covered by no triangle take the nearest covered
    value; the grid is min-max mapped so min -> 0 and max -> 1. A
    displacement range below 1e-12 mm yields an all-zero field.

    Requires matched topology and uvs on the active region.
    """
    width, height = int(resolution[0]), int(resolution[1])
    if width <= 0 or height <= 0:
        raise MeshError(f"extraction resolution must be positive, got {resolution}")
    if original.uvs is None:
        raise MeshError("original mesh has no uv coordinates to rasterize into")

    d = normal_displacements(original, modified)
    active_faces, active_verts = _active_elements(original)

    grid, covered = _rasterize(original.uvs, original.faces[active_faces], d, width, height)

    if not covered.any():
        raise MeshError("no active triangle covers any pixel; check uvs and resolution")
    if not covered.all():
        # nearest-covered fill: holes only occur at UV seams of non-tile meshes
        _, (iy, ix) = ndimage.distance_transform_edt(~covered, return_indices=True)
        grid = grid[iy, ix]

    d_active = d[active_verts]
    centered = d_active - d_active.mean()
    stats = DisplacementStats(
        min=float(d_active.min()),
        max=float(d_active.max()),
        mean=float(d_active.mean()),
        rms=float(np.sqrt(np.mean(centered**2))),
    )

    lo, hi = float(grid.min()), float(grid.max())
    if hi - lo < _DEGENERATE_RANGE_MM:
        values = np.zeros((height, width))
    else:
        values = (grid - lo) / (hi - lo)
    return ExtractionResult(
        heightfield=Heightfield(values, source_depth=16),
        stats=stats,
        coverage=float(covered.mean()),
    )


def _rasterize(
    uvs: np.ndarray,
    faces: np.ndarray,
    vertex_values: np.ndarray,
    width: int,
    height: int,
) -> Tuple[np.ndarray, np.ndarray]:
    """Barycentric rasterization of faces in UV space, last face wins.

    Pixel centers sit at (i + 0.5) / W like sample_bilinear, so applying a
    heightfield and extracting it back aligns pixel-for-pixel.
    """
    # corner positions in pixel-center coordinates
    xy = np.empty((len(faces), 3, 2))
    xy[:, :, 0] = uvs[faces, 0] * width - 0.5
    xy[:, :, 1] = uvs[faces, 1] * height - 0.5
    vals = vertex_values[faces]

    ax, ay = xy[:, 0, 0], xy[:, 0, 1]
    bx, by = xy[:, 1, 0], xy[:, 1, 1]
    cx, cy = xy[:, 2, 0], xy[:, 2, 1]
    denom = (by - cy) * (ax - cx) + (cx - bx) * (ay - cy)
    ok = np.abs(denom) > 1e-12  # zero-area uv triangles (unmapped sheets) are skipped

    x_lo = np.maximum(np.ceil(np.minimum.reduce([ax, bx, cx])), 0).astype(np.int64)
    x_hi = np.minimum(np.floor(np.maximum.reduce([ax, bx, cx])), width - 1).astype(np.int64)
    y_lo = np.maximum(np.ceil(np.minimum.reduce([ay, by, cy])), 0).astype(np.int64)
    y_hi = np.minimum(np.floor(np.maximum.reduce([ay, by, cy])), height - 1).astype(np.int64)

    nx = np.maximum(x_hi - x_lo + 1, 0)
    ny = np.maximum(y_hi - y_lo + 1, 0)
    counts = np.where(ok, nx * ny, 0)

    total = int(counts.sum())
    grid = np.zeros((height, width))
    covered = np.zeros((height, width), dtype=bool)
    if total == 0:
        return grid, covered

    # ragged candidate expansion: face f contributes counts[f] pixel probes
    face_of = np.repeat(np.arange(len(faces)), counts)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    within = np.arange(total) - starts[face_of]
    px = x_lo[face_of] + within % nx[face_of]
    py = y_lo[face_of] + within // nx[face_of]

    d_f = denom[face_of]
    l1 = ((by - cy)[face_of] * (px - cx[face_of]) + (cx - bx)[face_of] * (py - cy[face_of])) / d_f
    l2 = ((cy - ay)[face_of] * (px - cx[face_of]) + (ax - cx)[face_of] * (py - cy[face_of])) / d_f
    l3 = 1.0 - l1 - l2

    eps = -1e-9
    inside = (l1 >= eps) & (l2 >= eps) & (l3 >= eps)
    if not inside.any():
        return grid, covered

    face_of = face_of[inside]
    flat = py[inside] * width + px[inside]
    value = (
        l1[inside] * vals[face_of, 0]
        + l2[inside] * vals[face_of, 1]
        + l3[inside] * vals[face_of, 2]
    )

    # last-face-wins on shared-edge pixels, resolved deterministically:
    # sort by (pixel, face order) and keep the final write per pixel
    order = np.lexsort((face_of, flat))
    flat = flat[order]
    value = value[order]
    keep = np.empty(len(flat), dtype=bool)
    keep[:-1] = flat[1:] != flat[:-1]
    keep[-1] = True

    grid.ravel()[flat[keep]] = value[keep]
    covered.ravel()[flat[keep]] = True
    return grid, covered
