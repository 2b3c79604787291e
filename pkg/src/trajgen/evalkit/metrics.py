"""PSNR and SSIM for frame stacks with values in [0, 1]."""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

PSNR_CAP_DB = 100.0
SSIM_WINDOW = 8
K1, K2 = 0.01, 0.03


def _check(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if a.ndim == 3:
        a, b = a[None], b[None]
    if a.ndim != 4:
        raise ValueError(f"expected (F, H, W, C) stacks, got {a.shape}")
    return a, b


def psnr(a, b) -> float:
    """Mean per-frame PSNR in dB; ``inf`` if any frame pair is identical."""
    a, b = _check(a, b)
    mse = ((a - b) ** 2).mean(axis=(1, 2, 3))
    with np.errstate(divide="ignore"):
        per_frame = 10.0 * np.log10(1.0 / mse)
    return float(per_frame.mean())


def psnr_for_json(value: float) -> float:
    return min(value, PSNR_CAP_DB)


def ssim(a, b) -> float:
    """Mean SSIM over all 8x8 windows (stride 1), channels and frames."""
    a, b = _check(a, b)
    if min(a.shape[1:3]) < SSIM_WINDOW:
        raise ValueError(f"frames must be at least {SSIM_WINDOW}x{SSIM_WINDOW}")
    c1, c2 = K1**2, K2**2
    wa = sliding_window_view(a, (SSIM_WINDOW, SSIM_WINDOW), axis=(1, 2))
    wb = sliding_window_view(b, (SSIM_WINDOW, SSIM_WINDOW), axis=(1, 2))
    mu_a = wa.mean(axis=(-2, -1))
    mu_b = wb.mean(axis=(-2, -1))
    var_a = (wa * wa).mean(axis=(-2, -1)) - mu_a**2
    var_b = (wb * wb).mean(axis=(-2, -1)) - mu_b**2
    cov = (wa * wb).mean(axis=(-2, -1)) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    return float((num / den).mean())
