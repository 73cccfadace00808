"""Fidelity metrics between heightfields: RMS roughness, MSE, SSIM."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ImageError
from .heightfield import Heightfield, resample

# Canonical SSIM constants: 11x11 Gaussian window, sigma 1.5, k1/k2 defaults,
# dynamic range 1 for normalized heightfields.
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


@dataclass(frozen=True)
class MetricReport:
    rms_a: float
    rms_b: float
    mse: float
    ssim: float
    resolution: Tuple[int, int]  # (width, height) used after resampling

    def to_dict(self) -> dict:
        return {
            "rms_a": self.rms_a,
            "rms_b": self.rms_b,
            "mse": self.mse,
            "ssim": self.ssim,
            "resolution": list(self.resolution),
        }


def rms_roughness(h: Heightfield) -> float:
    """Mean-centered root-mean-square height (the Rq roughness convention)."""
    v = h.values
    return float(np.sqrt(np.mean((v - v.mean()) ** 2)))


def _matched(a: Heightfield, b: Heightfield) -> Tuple[np.ndarray, np.ndarray]:
    b = resample(b, a.width, a.height)
    return a.values, b.values


def mse(a: Heightfield, b: Heightfield) -> float:
    """Mean squared per-pixel difference on normalized values.

    0 means identical intensities, 1 completely different. If dimensions
    differ, b is bilinearly resampled onto a's grid first.
    """
    va, vb = _matched(a, b)
    return float(np.mean((va - vb) ** 2))


def pearson_r(a: Heightfield, b: Heightfield) -> float:
    """Pearson correlation of pixel values; b is resampled onto a's grid.

    Returns 0.0 when either image is constant (no linear association is
    measurable), which keeps corpus decorrelation sweeps total.
    """
    va, vb = _matched(a, b)
    x = va.ravel() - va.mean()
    y = vb.ravel() - vb.mean()
    denom = float(np.sqrt(np.sum(x * x) * np.sum(y * y)))
    if denom == 0.0:
        return 0.0
    return float(np.sum(x * y) / denom)


def _gaussian_kernel(size: int, sigma: float) -> np.ndarray:
    x = np.arange(size) - (size - 1) / 2.0
    k = np.exp(-(x**2) / (2.0 * sigma**2))
    return k / k.sum()


def _windowed_mean(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    # separable valid-mode convolution; the kernel is symmetric
    t = sliding_window_view(img, len(kernel), axis=0) @ kernel
    return sliding_window_view(t, len(kernel), axis=1) @ kernel


def ssim(a: Heightfield, b: Heightfield) -> float:
    """Mean local structural similarity over a Gaussian window.

    11x11 window with sigma 1.5, C1 = (0.01 L)^2, C2 = (0.03 L)^2 at
    dynamic range L = 1, averaged over valid window positions only.
    """
    va, vb = _matched(a, b)
    if min(va.shape) < SSIM_WINDOW:
        raise ImageError(
            f"images must be at least {SSIM_WINDOW}x{SSIM_WINDOW} for SSIM, got {va.shape[1]}x{va.shape[0]}"
        )
    kernel = _gaussian_kernel(SSIM_WINDOW, SSIM_SIGMA)
    c1 = SSIM_K1**2
    c2 = SSIM_K2**2

    mu_a = _windowed_mean(va, kernel)
    mu_b = _windowed_mean(vb, kernel)
    mu_aa = _windowed_mean(va * va, kernel)
    mu_bb = _windowed_mean(vb * vb, kernel)
    mu_ab = _windowed_mean(va * vb, kernel)

    var_a = mu_aa - mu_a**2
    var_b = mu_bb - mu_b**2
    cov = mu_ab - mu_a * mu_b

    score = ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) / (
        (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    )
    return float(score.mean())


def compare(a: Heightfield, b: Heightfield) -> MetricReport:
    """All three metrics at a's resolution (b resampled as needed)."""
    vb = resample(b, a.width, a.height)
    return MetricReport(
        rms_a=rms_roughness(a),
        rms_b=rms_roughness(vb),
        mse=mse(a, vb),
        ssim=ssim(a, vb),
        resolution=(a.width, a.height),
    )
