"""Geometry stylization: displace vertices along normals by sampled heights."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DisplacementError
from .heightfield import Heightfield, TextureImage, sample_bilinear_many
from .mesh import ACTIVE_GROUP, TriMesh


@dataclass(frozen=True)
class DisplacementParams:
    """Controls for apply_heightfield.

    magnification is the user-facing dimensionless multiplier (default 1.0).
    amplitude_mm is the physical height of a full-scale (value 1.0) texture;
    its 1.0 mm default is a documented placeholder, not a calibrated value.
    active_mask restricts which vertices may move; None means all.
    """

    magnification: float = 1.0
    amplitude_mm: float = 1.0
    active_mask: Optional[np.ndarray] = None

    def __post_init__(self):
        if not (self.magnification >= 0.0):
            raise DisplacementError(f"magnification must be >= 0, got {self.magnification}")
        if not (self.amplitude_mm > 0.0):
            raise DisplacementError(f"amplitude_mm must be > 0, got {self.amplitude_mm}")
        if self.active_mask is not None:
            mask = np.unique(np.asarray(self.active_mask, dtype=np.int64))
            mask.flags.writeable = False
            object.__setattr__(self, "active_mask", mask)

    def resolve_mask(self, mesh: TriMesh) -> np.ndarray:
        if self.active_mask is None:
            return np.arange(mesh.vertex_count, dtype=np.int64)
        if len(self.active_mask) and (self.active_mask.min() < 0 or self.active_mask.max() >= mesh.vertex_count):
            raise DisplacementError("active_mask contains out-of-range vertex indices")
        return self.active_mask

    def with_magnification(self, magnification: float) -> "DisplacementParams":
        return DisplacementParams(magnification, self.amplitude_mm, self.active_mask)


def apply_heightfield(mesh: TriMesh, h: Heightfield, params: DisplacementParams) -> TriMesh:
    """Displace active vertices along their normals by sampled heights.

    p'_i = p_i + magnification * amplitude_mm * sample(h, u_i, v_i) * n_i.
    Frozen vertices, topology, uvs and colors are untouched. Normals are
    NOT recomputed; callers displace off the undisplaced normals and must
    recompute explicitly if they need shading-accurate output.
    """
    active = params.resolve_mask(mesh)
    if mesh.uvs is None:
        raise DisplacementError(
            f"mesh has no uv coordinates; {len(active)} active vertices cannot sample the heightfield"
        )
    heights = sample_bilinear_many(h, mesh.uvs[active])
    offset = (params.magnification * params.amplitude_mm) * heights
    vertices = mesh.vertices.copy()
    vertices[active] += offset[:, None] * mesh.normals[active]
    return mesh.with_vertices(vertices)


def freeze_except_top(
    mesh: TriMesh, magnification: float = 1.0, amplitude_mm: float = 1.0
) -> DisplacementParams:
    """Params whose active mask is exactly the tile's stylizable vertex set."""
    if mesh.face_groups is None or ACTIVE_GROUP not in mesh.face_groups:
        raise DisplacementError(
            f"mesh carries no {ACTIVE_GROUP!r} face group; only tiles from make_tile can be frozen this way"
        )
    return DisplacementParams(
        magnification=magnification,
        amplitude_mm=amplitude_mm,
        active_mask=mesh.group_vertices(ACTIVE_GROUP),
    )


def bake_texture_colors(mesh: TriMesh, texture: TextureImage) -> TriMesh:
    """Color-stylization passthrough: sample the texture into vertex colors.

    Deliberately not an optimization loop; exports merely look textured.
    """
    if mesh.uvs is None:
        raise DisplacementError("mesh has no uv coordinates to sample colors with")
    channels = [
        sample_bilinear_many(Heightfield(np.clip(texture.rgb[:, :, k], 0.0, 1.0)), mesh.uvs)
        for k in range(3)
    ]
    return TriMesh(mesh.vertices, mesh.faces, mesh.normals, mesh.uvs, np.column_stack(channels), mesh.face_groups)
