"""Indexed triangle meshes: OBJ I/O, normalization, subdivision, tile construction.

Positions are in millimeters throughout. Meshes are immutable values: every
operation returns a new ``TriMesh`` and never mutates its input.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from .errors import MeshError, ObjParseError

# Face-group labels attached by make_tile; "active" marks the stylizable
# region, "frozen" everything that must not move.
ACTIVE_GROUP = "active"
FROZEN_GROUP = "frozen"

_UNGROUPED = "default"


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Indexed triangle mesh with per-vertex attributes.

    Attributes:
        vertices: (n, 3) float64 positions in mm.
        faces: (m, 3) int64 vertex indices.
        normals: (n, 3) float64 unit vectors.
        uvs: optional (n, 2) float64 coordinates in [0, 1]^2.
        colors: optional (n, 3) float64 RGB in [0, 1].
        face_groups: optional mapping of group name to sorted face indices.
    """

    vertices: np.ndarray
    faces: np.ndarray
    normals: np.ndarray
    uvs: Optional[np.ndarray] = None
    colors: Optional[np.ndarray] = None
    face_groups: Optional[Dict[str, np.ndarray]] = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "vertices", _readonly(np.asarray(self.vertices, dtype=np.float64)))
        object.__setattr__(self, "faces", _readonly(np.asarray(self.faces, dtype=np.int64)))
        object.__setattr__(self, "normals", _readonly(np.asarray(self.normals, dtype=np.float64)))
        if self.uvs is not None:
            object.__setattr__(self, "uvs", _readonly(np.asarray(self.uvs, dtype=np.float64)))
        if self.colors is not None:
            object.__setattr__(self, "colors", _readonly(np.asarray(self.colors, dtype=np.float64)))
        if self.face_groups is not None:
            groups = {name: _readonly(np.asarray(idx, dtype=np.int64)) for name, idx in self.face_groups.items()}
            object.__setattr__(self, "face_groups", groups)

    @property
    def vertex_count(self) -> int:
        return self.vertices.shape[0]

    @property
    def face_count(self) -> int:
        return self.faces.shape[0]

    def group_vertices(self, name: str) -> np.ndarray:
        """Unique, sorted vertex indices used by the faces of one group."""
        if self.face_groups is None or name not in self.face_groups:
            raise MeshError(f"mesh has no face group {name!r}")
        return np.unique(self.faces[self.face_groups[name]])

    def with_vertices(self, vertices: np.ndarray) -> "TriMesh":
        """Copy of this mesh with replaced positions; everything else shared."""
        return TriMesh(vertices, self.faces, self.normals, self.uvs, self.colors, self.face_groups)

    def validate(self) -> None:
        """Raise MeshError if any structural invariant is violated."""
        if self.vertex_count == 0 or self.face_count == 0:
            raise MeshError("empty mesh")
        if self.vertices.shape != (self.vertex_count, 3):
            raise MeshError("vertices must be (n, 3)")
        if self.faces.shape != (self.face_count, 3):
            raise MeshError("faces must be (m, 3)")
        if self.faces.min() < 0 or self.faces.max() >= self.vertex_count:
            raise MeshError("face index out of range")
        if not np.isfinite(self.vertices).all():
            raise MeshError("non-finite vertex position")
        if self.normals.shape != self.vertices.shape or not np.isfinite(self.normals).all():
            raise MeshError("normals missing or non-finite")
        if self.uvs is not None:
            if self.uvs.shape != (self.vertex_count, 2):
                raise MeshError("uvs must match vertex count")
            if not np.isfinite(self.uvs).all():
                raise MeshError("non-finite uv")
        if self.colors is not None and self.colors.shape != (self.vertex_count, 3):
            raise MeshError("colors must match vertex count")
        if self.face_groups is not None:
            for name, idx in self.face_groups.items():
                if len(idx) and (idx.min() < 0 or idx.max() >= self.face_count):
                    raise MeshError(f"face group {name!r} index out of range")


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box; min <= max componentwise."""

    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "min", np.asarray(self.min, dtype=np.float64))
        object.__setattr__(self, "max", np.asarray(self.max, dtype=np.float64))

    @property
    def extents(self) -> np.ndarray:
        return self.max - self.min

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.min + self.max)


def bounding_box(mesh: TriMesh) -> BoundingBox:
    return BoundingBox(mesh.vertices.min(axis=0), mesh.vertices.max(axis=0))


@dataclass(frozen=True)
class UnitCubeTransform:
    """Invertible record of the normalization applied by normalize_unit_cube.

    Forward map: p' = (p - center) * scale.
    """

    scale: float
    center: np.ndarray

    def apply(self, points: np.ndarray) -> np.ndarray:
        return (np.asarray(points, dtype=np.float64) - self.center) * self.scale

    def invert(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=np.float64) / self.scale + self.center


# ---------------------------------------------------------------------------
# OBJ I/O


def load_obj(path) -> TriMesh:
    """Parse an ASCII OBJ file into a TriMesh.

    Quads and larger polygons are fan-triangulated. Corners are welded on
    their (v, vt, vn) index triple, so positions referenced with different
    uvs or normals become distinct vertices. Missing normals are computed
    area-weighted; missing uvs leave the uvs field absent.

    Raises:
        ObjParseError: malformed record or index out of range, with the line.
        MeshError: file parses but contains no usable faces.
    """
    path = str(path)
    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        return _parse_obj(fh, path)


def loads_obj(text: str, name: str = "<string>") -> TriMesh:
    """Parse OBJ data from a string (same semantics as load_obj)."""
    return _parse_obj(text.splitlines(), name)


def _parse_obj(lines, path: str) -> TriMesh:
    positions: list = []
    pos_colors: list = []
    tex: list = []
    norms: list = []

    corner_index: dict = {}
    out_pos: list = []
    out_color: list = []
    out_uv: list = []
    out_norm: list = []
    faces: list = []
    face_group: list = []

    group = _UNGROUPED
    any_uv = False
    any_missing_normal = False

    def resolve(idx: int, count: int, lineno: int, what: str) -> int:
        if idx < 0:
            idx = count + idx
        else:
            idx = idx - 1
        if idx < 0 or idx >= count:
            raise ObjParseError(f"{what} index out of range", path, lineno)
        return idx

    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        tag = parts[0]
        try:
            if tag == "v":
                if len(parts) not in (4, 7):
                    raise ValueError("expected 3 or 6 components")
                positions.append([float(parts[1]), float(parts[2]), float(parts[3])])
                pos_colors.append([float(p) for p in parts[4:7]] if len(parts) == 7 else None)
            elif tag == "vt":
                if len(parts) < 3:
                    raise ValueError("expected at least 2 components")
                tex.append([float(parts[1]), float(parts[2])])
            elif tag == "vn":
                if len(parts) != 4:
                    raise ValueError("expected 3 components")
                norms.append([float(parts[1]), float(parts[2]), float(parts[3])])
            elif tag == "f":
                if len(parts) < 4:
                    raise ValueError("face needs at least 3 corners")
                corners = []
                for ref in parts[1:]:
                    fields = ref.split("/")
                    vi = resolve(int(fields[0]), len(positions), lineno, "vertex")
                    ti = None
                    ni = None
                    if len(fields) > 1 and fields[1]:
                        ti = resolve(int(fields[1]), len(tex), lineno, "texture")
                        any_uv = True
                    if len(fields) > 2 and fields[2]:
                        ni = resolve(int(fields[2]), len(norms), lineno, "normal")
                    key = (vi, ti, ni)
                    out = corner_index.get(key)
                    if out is None:
                        out = len(out_pos)
                        corner_index[key] = out
                        out_pos.append(positions[vi])
                        out_color.append(pos_colors[vi])
                        out_uv.append(tex[ti] if ti is not None else None)
                        out_norm.append(norms[ni] if ni is not None else None)
                    corners.append(out)
                for a, b in zip(corners[1:], corners[2:]):
                    faces.append((corners[0], a, b))
                    face_group.append(group)
            elif tag == "g":
                group = parts[1] if len(parts) > 1 else _UNGROUPED
            # o/s/usemtl/mtllib and other records carry no geometry
        except ObjParseError:
            raise
        except (ValueError, IndexError) as exc:
            raise ObjParseError(f"malformed {tag!r} record: {exc}", path, lineno) from exc

    if not faces:
        raise MeshError(f"{path}: no faces found")

    vertices = np.asarray(out_pos, dtype=np.float64)
    face_arr = np.asarray(faces, dtype=np.int64)

    uvs = None
    if any_uv:
        uvs = np.asarray([uv if uv is not None else (0.0, 0.0) for uv in out_uv], dtype=np.float64)

    colors = None
    if any(c is not None for c in out_color):
        colors = np.asarray([c if c is not None else (1.0, 1.0, 1.0) for c in out_color], dtype=np.float64)

    any_missing_normal = any(n is None for n in out_norm)
    if any_missing_normal:
        normals = _area_weighted_normals(vertices, face_arr)
    else:
        normals = _normalized(np.asarray(out_norm, dtype=np.float64))

    groups: Dict[str, np.ndarray] = {}
    for i, g in enumerate(face_group):
        if g != _UNGROUPED:
            groups.setdefault(g, []).append(i)
    face_groups = {k: np.asarray(v, dtype=np.int64) for k, v in groups.items()} or None

    mesh = TriMesh(vertices, face_arr, normals, uvs, colors, face_groups)
    mesh.validate()
    return mesh


def save_obj(mesh: TriMesh, path) -> None:
    """Write mesh as ASCII OBJ (v / vt / vn / f records, g for face groups)."""
    with open(str(path), "w", encoding="utf-8") as fh:
        fh.write(dumps_obj(mesh))


def dumps_obj(mesh: TriMesh) -> str:
    mesh.validate()
    lines = []
    has_uv = mesh.uvs is not None
    if mesh.colors is not None:
        for p, c in zip(mesh.vertices, mesh.colors):
            lines.append(f"v {p[0]:.10g} {p[1]:.10g} {p[2]:.10g} {c[0]:.6g} {c[1]:.6g} {c[2]:.6g}")
    else:
        for p in mesh.vertices:
            lines.append(f"v {p[0]:.10g} {p[1]:.10g} {p[2]:.10g}")
    if has_uv:
        for t in mesh.uvs:
            lines.append(f"vt {t[0]:.8g} {t[1]:.8g}")
    for n in mesh.normals:
        lines.append(f"vn {n[0]:.8g} {n[1]:.8g} {n[2]:.8g}")

    labels = [_UNGROUPED] * mesh.face_count
    if mesh.face_groups:
        for name, idx in mesh.face_groups.items():
            for i in idx:
                labels[i] = name

    current = None
    for i, f in enumerate(mesh.faces):
        if mesh.face_groups and labels[i] != current:
            current = labels[i]
            lines.append(f"g {current}")
        a, b, c = (int(v) + 1 for v in f)
        if has_uv:
            lines.append(f"f {a}/{a}/{a} {b}/{b}/{b} {c}/{c}/{c}")
        else:
            lines.append(f"f {a}//{a} {b}//{b} {c}//{c}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Geometry operations


def _normalized(vectors: np.ndarray) -> np.ndarray:
    lengths = np.linalg.norm(vectors, axis=1, keepdims=True)
    safe = np.where(lengths > 0.0, lengths, 1.0)
    return vectors / safe


def _area_weighted_normals(vertices: np.ndarray, faces: np.ndarray) -> np.ndarray:
    a = vertices[faces[:, 0]]
    b = vertices[faces[:, 1]]
    c = vertices[faces[:, 2]]
    # cross product magnitude = 2x face area, so summing unnormalized face
    # normals is exactly area weighting
    fn = np.cross(b - a, c - a)
    acc = np.zeros_like(vertices)
    for k in range(3):
        np.add.at(acc, faces[:, k], fn)
    lengths = np.linalg.norm(acc, axis=1)
    missing = lengths <= 1e-30
    if missing.any():
        warnings.warn(
            f"{int(missing.sum())} vertices have no incident face area; normals default to +Z",
            RuntimeWarning,
            stacklevel=3,
        )
        acc[missing] = (0.0, 0.0, 1.0)
        lengths[missing] = 1.0
    return acc / lengths[:, None]


def compute_normals(mesh: TriMesh) -> TriMesh:
    """Recompute per-vertex normals as the normalized area-weighted average
    of incident face normals. Isolated vertices get +Z and a warning."""
    normals = _area_weighted_normals(mesh.vertices, mesh.faces)
    return TriMesh(mesh.vertices, mesh.faces, normals, mesh.uvs, mesh.colors, mesh.face_groups)


def normalize_unit_cube(mesh: TriMesh) -> Tuple[TriMesh, UnitCubeTransform]:
    """Scale and center the mesh so its bounding box fits the unit cube.

    The longest axis becomes exactly 1 and the box is centered at the
    origin; aspect ratios are preserved. Returns the transformed mesh and
    the invertible transform.
    """
    box = bounding_box(mesh)
    longest = float(box.extents.max())
    if longest <= 0.0:
        raise MeshError("mesh has zero extent; cannot normalize")
    transform = UnitCubeTransform(scale=1.0 / longest, center=box.center)
    return mesh.with_vertices(transform.apply(mesh.vertices)), transform


def subdivide_to(mesh: TriMesh, target_faces: int) -> TriMesh:
    """Uniform 1:4 midpoint subdivision until face count >= target_faces.

    Flat regions stay coplanar (midpoints are linear). uvs and colors are
    interpolated linearly at edge midpoints; normals are averaged and
    renormalized. Result has original_faces * 4^k faces for the smallest
    sufficient k.
    """
    if target_faces < mesh.face_count:
        raise MeshError(
            f"target {target_faces} below current face count {mesh.face_count}; decimation is out of scope"
        )
    out = mesh
    while out.face_count < target_faces:
        out = _subdivide_once(out)
    return out


def _subdivide_once(mesh: TriMesh) -> TriMesh:
    faces = mesh.faces
    nv = mesh.vertex_count

    edges = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    edges = np.sort(edges, axis=1)
    unique_edges, inverse = np.unique(edges, axis=0, return_inverse=True)
    mid_index = nv + inverse.reshape(3, -1)  # rows: ab, bc, ca per face

    def midpoint(attr):
        return 0.5 * (attr[unique_edges[:, 0]] + attr[unique_edges[:, 1]])

    vertices = np.concatenate([mesh.vertices, midpoint(mesh.vertices)])
    normals = np.concatenate([mesh.normals, _normalized(midpoint(mesh.normals))])
    uvs = np.concatenate([mesh.uvs, midpoint(mesh.uvs)]) if mesh.uvs is not None else None
    colors = np.concatenate([mesh.colors, midpoint(mesh.colors)]) if mesh.colors is not None else None

    a, b, c = faces[:, 0], faces[:, 1], faces[:, 2]
    mab, mbc, mca = mid_index[0], mid_index[1], mid_index[2]
    # children stored face-major: old face i -> new faces 4i .. 4i+3
    new_faces = np.stack(
        [
            np.column_stack([a, mab, mca]),
            np.column_stack([mab, b, mbc]),
            np.column_stack([mca, mbc, c]),
            np.column_stack([mab, mbc, mca]),
        ],
        axis=1,
    ).reshape(-1, 3)

    face_groups = None
    if mesh.face_groups is not None:
        face_groups = {
            name: (idx[:, None] * 4 + np.arange(4)).reshape(-1)
            for name, idx in mesh.face_groups.items()
        }
    return TriMesh(vertices, new_faces, normals, uvs, colors, face_groups)


def planar_uvs(mesh: TriMesh, axes: Tuple[int, int] = (0, 1)) -> TriMesh:
    """Assign uvs by projecting positions onto two axes, normalized to [0,1]^2.

    Fallback for meshes uploaded without texture coordinates; matches the
    convention that the uv map is normalized to fit the texture.
    """
    box = bounding_box(mesh)
    extents = np.where(box.extents > 0.0, box.extents, 1.0)
    rel = (mesh.vertices - box.min) / extents
    uvs = rel[:, list(axes)]
    return TriMesh(mesh.vertices, mesh.faces, mesh.normals, uvs, mesh.colors, mesh.face_groups)


# ---------------------------------------------------------------------------
# Tile construction


def make_tile(size_mm: Tuple[float, float, float] = (50.0, 50.0, 10.0), target_faces: int = 25000) -> TriMesh:
    """Axis-aligned box with a finely gridded top face for stylization.

    The box spans [0, sx] x [0, sy] x [0, sz]. The top (+Z) face is a
    regular triangle grid sized so total faces >= target_faces, carries
    planar uvs spanning [0, 1]^2, and is labeled "active"; the bottom and
    side faces (10 triangles) are labeled "frozen". Sheets do not share
    vertices across box edges, so top-face normals are exactly +Z.
    """
    sx, sy, sz = (float(s) for s in size_mm)
    if sx <= 0 or sy <= 0 or sz <= 0:
        raise MeshError(f"tile extents must be positive, got {size_mm}")
    if target_faces < 12:
        raise MeshError("a closed box needs at least 12 faces")

    n = max(1, math.ceil(math.sqrt((target_faces - 10) / 2.0)))

    verts: list = []
    faces: list = []
    uvs: list = []

    def add_quad_sheet(corners):
        # two triangles over 4 fresh vertices; degenerate (0,0) uv marks
        # the sheet as not texture-mapped
        base = len(verts)
        verts.extend(corners)
        uvs.extend([(0.0, 0.0)] * 4)
        faces.append((base, base + 1, base + 2))
        faces.append((base, base + 2, base + 3))

    # bottom (-Z) and the four side walls; winding keeps normals outward
    add_quad_sheet([(0, 0, 0), (0, sy, 0), (sx, sy, 0), (sx, 0, 0)])
    add_quad_sheet([(0, 0, 0), (sx, 0, 0), (sx, 0, sz), (0, 0, sz)])
    add_quad_sheet([(sx, 0, 0), (sx, sy, 0), (sx, sy, sz), (sx, 0, sz)])
    add_quad_sheet([(sx, sy, 0), (0, sy, 0), (0, sy, sz), (sx, sy, sz)])
    add_quad_sheet([(0, sy, 0), (0, 0, 0), (0, 0, sz), (0, sy, sz)])

    frozen_faces = np.arange(len(faces), dtype=np.int64)

    base = len(verts)
    grid = np.linspace(0.0, 1.0, n + 1)
    gu, gv = np.meshgrid(grid, grid, indexing="xy")
    top_verts = np.column_stack([gu.ravel() * sx, gv.ravel() * sy, np.full(gu.size, sz)])
    top_uvs = np.column_stack([gu.ravel(), gv.ravel()])

    row = np.arange(n)
    col = np.arange(n)
    cc, rr = np.meshgrid(col, row, indexing="xy")
    v00 = base + rr * (n + 1) + cc
    v10 = v00 + 1
    v01 = v00 + (n + 1)
    v11 = v01 + 1
    top_faces = np.concatenate(
        [
            np.column_stack([v00.ravel(), v10.ravel(), v11.ravel()]),
            np.column_stack([v00.ravel(), v11.ravel(), v01.ravel()]),
        ]
    )

    vertices = np.concatenate([np.asarray(verts, dtype=np.float64), top_verts])
    uv_arr = np.concatenate([np.asarray(uvs, dtype=np.float64), top_uvs])
    face_arr = np.concatenate([np.asarray(faces, dtype=np.int64), top_faces])
    active_faces = np.arange(len(faces), len(face_arr), dtype=np.int64)

    mesh = TriMesh(
        vertices,
        face_arr,
        np.zeros_like(vertices),
        uv_arr,
        None,
        {FROZEN_GROUP: frozen_faces, ACTIVE_GROUP: active_faces},
    )
    return compute_normals(mesh)
