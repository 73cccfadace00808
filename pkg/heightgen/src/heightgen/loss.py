"""Differentiable training losses.

The SSIM term uses the same parameterization as the evaluation metric
(11x11 Gaussian window, sigma 1.5, K1 0.01, K2 0.03, unit dynamic range,
biased covariance, valid windows only) so the loss optimizes exactly what
the reports measure.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F

WINDOW = 11
SIGMA = 1.5
K1 = 0.01
K2 = 0.03


def _gaussian_window(dtype, device) -> torch.Tensor:
    half = (WINDOW - 1) / 2.0
    coords = torch.arange(WINDOW, dtype=dtype, device=device) - half
    g = torch.exp(-(coords**2) / (2.0 * SIGMA**2))
    kernel = torch.outer(g, g)
    kernel = kernel / kernel.sum()
    return kernel[None, None]


def ssim(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """Mean SSIM over valid windows for batches of 1-channel images."""
    if a.shape != b.shape or a.dim() != 4 or a.shape[1] != 1:
        raise ValueError(f"expected matching (N,1,H,W) tensors, got {tuple(a.shape)} vs {tuple(b.shape)}")
    if a.shape[2] < WINDOW or a.shape[3] < WINDOW:
        raise ValueError(f"images must be at least {WINDOW}px on each side")
    kernel = _gaussian_window(a.dtype, a.device)
    mu_a = F.conv2d(a, kernel)
    mu_b = F.conv2d(b, kernel)
    var_a = F.conv2d(a * a, kernel) - mu_a * mu_a
    var_b = F.conv2d(b * b, kernel) - mu_b * mu_b
    cov = F.conv2d(a * b, kernel) - mu_a * mu_b
    c1, c2 = K1**2, K2**2
    ssim_map = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) / (
        (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    )
    return ssim_map.mean()


def heightfield_loss(
    pred: torch.Tensor, target: torch.Tensor, w_mse: float, w_ssim: float
) -> tuple[torch.Tensor, dict]:
    mse_term = F.mse_loss(pred, target)
    ssim_term = 1.0 - ssim(pred, target)
    loss = w_mse * mse_term + w_ssim * ssim_term
    parts = {"mse": float(mse_term.detach()), "one_minus_ssim": float(ssim_term.detach())}
    return loss, parts


def vae_pretrain_loss(
    recon: torch.Tensor, target: torch.Tensor, mu: torch.Tensor, logvar: torch.Tensor,
    kl_weight: float = 1e-3,
) -> torch.Tensor:
    recon_term = F.mse_loss(recon, target)
    kl = -0.5 * torch.mean(1.0 + logvar - mu * mu - torch.exp(logvar))
    return recon_term + kl_weight * kl
