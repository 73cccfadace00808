from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tactiletex.displace import (
    DisplacementParams,
    apply_heightfield,
    bake_texture_colors,
    freeze_except_top,
)
from tactiletex.errors import DisplacementError
from tactiletex.heightfield import Heightfield, TextureImage
from tactiletex.mesh import ACTIVE_GROUP, FROZEN_GROUP, TriMesh, make_tile


def _sphere_patch(n: int = 9) -> TriMesh:
    """Curved open surface with non-axis normals and planar uvs."""
    u, v = np.meshgrid(np.linspace(0.1, 0.9, n), np.linspace(0.1, 0.9, n))
    theta = u * np.pi
    phi = v * np.pi
    vertices = np.column_stack(
        [
            (np.sin(theta) * np.cos(phi)).ravel(),
            (np.sin(theta) * np.sin(phi)).ravel(),
            np.cos(theta).ravel(),
        ]
    )
    normals = vertices / np.linalg.norm(vertices, axis=1, keepdims=True)
    faces = []
    for i in range(n - 1):
        for j in range(n - 1):
            a = i * n + j
            faces.append([a, a + 1, a + n])
            faces.append([a + 1, a + n + 1, a + n])
    return TriMesh(vertices, np.array(faces), normals, uvs=np.column_stack([u.ravel(), v.ravel()]))


def test_constant_field_moves_top_by_product(small_tile):
    h = Heightfield(np.full((16, 16), 1.0))
    params = freeze_except_top(small_tile, magnification=2.0, amplitude_mm=1.5)
    out = apply_heightfield(small_tile, h, params)
    top = small_tile.group_vertices(ACTIVE_GROUP)
    frozen = small_tile.group_vertices(FROZEN_GROUP)
    delta = out.vertices - small_tile.vertices
    np.testing.assert_allclose(delta[top, 2], 3.0, atol=1e-12)
    np.testing.assert_allclose(delta[top, :2], 0.0, atol=1e-12)
    np.testing.assert_array_equal(out.vertices[frozen], small_tile.vertices[frozen])


def test_displacement_is_along_vertex_normals():
    patch = _sphere_patch()
    h = Heightfield(np.full((8, 8), 0.5))
    out = apply_heightfield(patch, h, DisplacementParams(amplitude_mm=2.0))
    np.testing.assert_allclose(out.vertices, patch.vertices + 1.0 * patch.normals, atol=1e-12)


def test_heights_sampled_at_vertex_uvs(waves_64):
    patch = _sphere_patch()
    from tactiletex.heightfield import sample_bilinear_many

    out = apply_heightfield(patch, waves_64, DisplacementParams())
    radial = np.einsum("ij,ij->i", out.vertices - patch.vertices, patch.normals)
    np.testing.assert_allclose(radial, sample_bilinear_many(waves_64, patch.uvs), atol=1e-12)


@given(st.floats(0.0, 3.0), st.integers(0, 100))
def test_magnification_is_linear(magnification, seed):
    patch = _sphere_patch(5)
    values = np.random.default_rng(seed).random((12, 12))
    h = Heightfield(values)
    base = apply_heightfield(patch, h, DisplacementParams(magnification=0.0)).vertices
    unit = apply_heightfield(patch, h, DisplacementParams(magnification=1.0)).vertices
    at_m = apply_heightfield(patch, h, DisplacementParams(magnification=magnification)).vertices
    np.testing.assert_allclose(at_m, base + magnification * (unit - base), atol=1e-9)


def test_zero_magnification_is_identity(small_tile, waves_64):
    params = freeze_except_top(small_tile, magnification=0.0)
    out = apply_heightfield(small_tile, waves_64, params)
    np.testing.assert_array_equal(out.vertices, small_tile.vertices)


def test_mask_restricts_motion():
    patch = _sphere_patch(5)
    h = Heightfield(np.full((4, 4), 1.0))
    mask = np.array([0, 3, 7])
    out = apply_heightfield(patch, h, DisplacementParams(active_mask=mask))
    moved = np.where(np.any(out.vertices != patch.vertices, axis=1))[0]
    np.testing.assert_array_equal(moved, mask)


def test_topology_and_attributes_untouched(small_tile, waves_64):
    out = apply_heightfield(small_tile, waves_64, freeze_except_top(small_tile))
    assert out.faces is small_tile.faces
    assert out.uvs is small_tile.uvs
    assert out.normals is small_tile.normals
    assert set(out.face_groups) == set(small_tile.face_groups)


def test_missing_uvs_errors(waves_64):
    patch = _sphere_patch(4)
    bare = TriMesh(patch.vertices, patch.faces, patch.normals)
    with pytest.raises(DisplacementError):
        apply_heightfield(bare, waves_64, DisplacementParams())


def test_param_validation():
    with pytest.raises(DisplacementError):
        DisplacementParams(magnification=-0.5)
    with pytest.raises(DisplacementError):
        DisplacementParams(amplitude_mm=0.0)


def test_freeze_except_top_needs_tile_groups():
    patch = _sphere_patch(4)
    with pytest.raises(DisplacementError):
        freeze_except_top(patch)


def test_freeze_mask_is_exactly_the_top(small_tile):
    params = freeze_except_top(small_tile)
    np.testing.assert_array_equal(params.active_mask, small_tile.group_vertices(ACTIVE_GROUP))


def test_bake_texture_colors_samples_rgb():
    patch = _sphere_patch(5)
    rgb = np.zeros((8, 8, 3))
    rgb[:, :, 0] = 1.0  # uniformly red
    out = bake_texture_colors(patch, TextureImage(rgb))
    expected = np.tile([1.0, 0.0, 0.0], (patch.vertex_count, 1))
    np.testing.assert_allclose(out.colors, expected, atol=1e-12)
    np.testing.assert_array_equal(out.vertices, patch.vertices)
