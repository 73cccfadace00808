"""Heightfields and texture images: PNG I/O, rotation, bilinear sampling.

The canonical heightfield is a row-major float grid normalized to [0, 1].
Grayscale PNG pixel p at bit depth d maps to p / (2^d - 1). Sampling uses
pixel centers at ((i + 0.5) / W, (j + 0.5) / H) with u along columns and
v along rows; out-of-range coordinates clamp to the edge.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from PIL import Image

from .errors import ImageError

# Rec.709 luminance coefficients for the grayscaling baseline.
_LUMA = np.array([0.2126, 0.7152, 0.0722])


@dataclass(frozen=True, eq=False)
class Heightfield:
    """Normalized height grid; values[row, col] in [0, 1]."""

    values: np.ndarray
    source_depth: int = 8

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.values, dtype=np.float64))
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    def validate(self) -> None:
        if self.values.ndim != 2 or self.width == 0 or self.height == 0:
            raise ImageError("heightfield must be a non-empty 2D grid")
        if not np.isfinite(self.values).all():
            raise ImageError("heightfield contains non-finite values")
        if self.values.min() < 0.0 or self.values.max() > 1.0:
            raise ImageError("heightfield values must lie in [0, 1]")
        if self.source_depth not in (8, 16):
            raise ImageError(f"unsupported bit depth {self.source_depth}")


@dataclass(frozen=True, eq=False)
class TextureImage:
    """RGB image; rgb[row, col, channel] in [0, 1]."""

    rgb: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.rgb, dtype=np.float64))
        v.flags.writeable = False
        object.__setattr__(self, "rgb", v)

    @property
    def width(self) -> int:
        return self.rgb.shape[1]

    @property
    def height(self) -> int:
        return self.rgb.shape[0]

    def validate(self) -> None:
        if self.rgb.ndim != 3 or self.rgb.shape[2] != 3 or self.width == 0 or self.height == 0:
            raise ImageError("texture must be a non-empty (h, w, 3) grid")
        if not np.isfinite(self.rgb).all():
            raise ImageError("texture contains non-finite values")
        if self.rgb.min() < 0.0 or self.rgb.max() > 1.0:
            raise ImageError("texture channels must lie in [0, 1]")


# ---------------------------------------------------------------------------
# PNG I/O


def _open_image(path) -> Image.Image:
    try:
        return Image.open(str(path))
    except Exception as exc:
        raise ImageError(f"cannot read image {path}: {exc}") from exc


def load_heightfield(path) -> Heightfield:
    """Load a grayscale PNG as a normalized heightfield.

    8-bit maps by /255, 16-bit by /65535; RGB inputs are converted by
    Rec.709 luminance first.
    """
    img = _open_image(path)
    if img.mode in ("RGB", "RGBA"):
        return luminance(TextureImage(np.asarray(img.convert("RGB"), dtype=np.float64) / 255.0))
    if img.mode in ("I;16", "I;16B", "I"):
        raw = np.asarray(img, dtype=np.float64)
        return Heightfield(raw / 65535.0, source_depth=16)
    if img.mode in ("L", "P", "LA", "1"):
        raw = np.asarray(img.convert("L"), dtype=np.float64)
        return Heightfield(raw / 255.0, source_depth=8)
    raise ImageError(f"unsupported image mode {img.mode!r} in {path}")


def save_heightfield(h: Heightfield, path, depth: int = 16) -> None:
    """Quantize to round(v * (2^depth - 1)) and write a grayscale PNG."""
    h.validate()
    if depth == 8:
        arr = np.rint(h.values * 255.0).astype(np.uint8)
        Image.fromarray(arr, mode="L").save(str(path), format="PNG")
    elif depth == 16:
        arr = np.rint(h.values * 65535.0).astype(np.uint16)
        Image.fromarray(arr).save(str(path), format="PNG")
    else:
        raise ImageError(f"depth must be 8 or 16, got {depth}")


def encode_heightfield_png(h: Heightfield, depth: int = 16) -> bytes:
    """PNG bytes of the heightfield (wire format for the generator protocol)."""
    import io

    buf = io.BytesIO()
    h.validate()
    if depth == 8:
        Image.fromarray(np.rint(h.values * 255.0).astype(np.uint8), mode="L").save(buf, format="PNG")
    elif depth == 16:
        Image.fromarray(np.rint(h.values * 65535.0).astype(np.uint16)).save(buf, format="PNG")
    else:
        raise ImageError(f"depth must be 8 or 16, got {depth}")
    return buf.getvalue()


def decode_heightfield_png(data: bytes) -> Heightfield:
    import io

    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except Exception as exc:
        raise ImageError(f"cannot decode PNG payload: {exc}") from exc
    if img.mode in ("I;16", "I;16B", "I"):
        return Heightfield(np.asarray(img, dtype=np.float64) / 65535.0, source_depth=16)
    if img.mode == "L":
        return Heightfield(np.asarray(img, dtype=np.float64) / 255.0, source_depth=8)
    raise ImageError(f"unsupported payload mode {img.mode!r}")


def load_texture(path) -> TextureImage:
    """Load a PNG as an RGB texture; grayscale is replicated, alpha dropped."""
    img = _open_image(path).convert("RGB")
    return TextureImage(np.asarray(img, dtype=np.float64) / 255.0)


def save_texture(t: TextureImage, path) -> None:
    t.validate()
    arr = np.rint(t.rgb * 255.0).astype(np.uint8)
    Image.fromarray(arr, mode="RGB").save(str(path), format="PNG")


def encode_texture_png(t: TextureImage) -> bytes:
    import io

    t.validate()
    buf = io.BytesIO()
    Image.fromarray(np.rint(t.rgb * 255.0).astype(np.uint8), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def decode_texture_png(data: bytes) -> TextureImage:
    import io

    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except Exception as exc:
        raise ImageError(f"cannot decode PNG payload: {exc}") from exc
    return TextureImage(np.asarray(img.convert("RGB"), dtype=np.float64) / 255.0)


# ---------------------------------------------------------------------------
# Transforms


def rotate90(h: Heightfield, quarter_turns: int) -> Heightfield:
    """Counterclockwise rotation by the given number of quarter turns."""
    if quarter_turns not in (0, 1, 2, 3):
        raise ImageError(f"quarter_turns must be in 0..3, got {quarter_turns}")
    return Heightfield(np.rot90(h.values, quarter_turns), source_depth=h.source_depth)


def rotate90_texture(t: TextureImage, quarter_turns: int) -> TextureImage:
    if quarter_turns not in (0, 1, 2, 3):
        raise ImageError(f"quarter_turns must be in 0..3, got {quarter_turns}")
    return TextureImage(np.rot90(t.rgb, quarter_turns, axes=(0, 1)))


def sample_bilinear(h: Heightfield, u: float, v: float) -> float:
    """Bilinear lookup at normalized (u, v); coordinates clamp to [0, 1]."""
    return float(sample_bilinear_many(h, np.array([[u, v]]))[0])


def sample_bilinear_many(h: Heightfield, uv: np.ndarray) -> np.ndarray:
    """Vectorized bilinear lookup for an (n, 2) array of (u, v) pairs."""
    values = h.values
    rows, cols = values.shape
    uv = np.asarray(uv, dtype=np.float64)
    if not np.isfinite(uv).all():
        raise ImageError("uv coordinates must be finite")

    x = np.clip(uv[:, 0], 0.0, 1.0) * cols - 0.5
    y = np.clip(uv[:, 1], 0.0, 1.0) * rows - 0.5
    x = np.clip(x, 0.0, cols - 1.0)
    y = np.clip(y, 0.0, rows - 1.0)

    x0 = np.floor(x).astype(np.int64)
    y0 = np.floor(y).astype(np.int64)
    x1 = np.minimum(x0 + 1, cols - 1)
    y1 = np.minimum(y0 + 1, rows - 1)
    fx = x - x0
    fy = y - y0

    top = values[y0, x0] * (1.0 - fx) + values[y0, x1] * fx
    bottom = values[y1, x0] * (1.0 - fx) + values[y1, x1] * fx
    return top * (1.0 - fy) + bottom * fy


def resample(h: Heightfield, width: int, height: int) -> Heightfield:
    """Bilinear resample onto a width x height grid (pixel-center aligned)."""
    if h.width == width and h.height == height:
        return h
    u = (np.arange(width) + 0.5) / width
    v = (np.arange(height) + 0.5) / height
    uu, vv = np.meshgrid(u, v)
    flat = sample_bilinear_many(h, np.column_stack([uu.ravel(), vv.ravel()]))
    return Heightfield(flat.reshape(height, width), source_depth=h.source_depth)


def resample_texture(t: TextureImage, width: int, height: int) -> TextureImage:
    if t.width == width and t.height == height:
        return t
    channels = [
        resample(Heightfield(np.clip(t.rgb[:, :, k], 0.0, 1.0)), width, height).values
        for k in range(3)
    ]
    return TextureImage(np.stack(channels, axis=-1))


def luminance(t: TextureImage) -> Heightfield:
    """Rec.709 grayscale of a texture, clamped to [0, 1]."""
    values = np.clip(t.rgb @ _LUMA, 0.0, 1.0)
    return Heightfield(values, source_depth=8)
