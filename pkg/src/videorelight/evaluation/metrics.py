"""Video quality metrics, all computed in float64.

psnr/ssim follow the usual definitions for [0, 1] video (ssim with an 8x8
Gaussian window, sigma 1.5, valid-mode). Temporal smoothness is proxied by
the mean squared second temporal difference (lower = smoother), which keeps
the ordering semantics of interpolation-based smoothness scores without a
pretrained interpolation model. Albedo preservation compares per-pixel chroma
(value over mean-channel luma) inside the foreground mask.
"""

from __future__ import annotations

import numpy as np
from scipy.signal import correlate2d

PSNR_CAP_DB = 99.0
SSIM_WINDOW = 8
SSIM_SIGMA = 1.5
CHROMA_EPS = 1e-3


def _check_pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def psnr(a, b) -> float:
    """10*log10(1/MSE) over all pixels and frames; identical inputs report
    the +inf sentinel capped at 99 dB."""
    a, b = _check_pair(a, b)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(10.0 * np.log10(1.0 / mse), PSNR_CAP_DB)


def _gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    offs = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    k = np.exp(-(offs**2) / (2.0 * sigma * sigma))
    win = np.outer(k, k)
    return win / win.sum()


def ssim(a, b) -> float:
    """Gaussian-windowed SSIM per frame and channel, averaged."""
    a, b = _check_pair(a, b)
    if a.ndim != 4:
        raise ValueError(f"expected (f, h, w, c) videos, got shape {a.shape}")
    f, h, w, c = a.shape
    if h < SSIM_WINDOW or w < SSIM_WINDOW:
        raise ValueError(f"frames {h}x{w} smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window")
    win = _gaussian_window()
    c1 = 0.01**2
    c2 = 0.03**2
    scores = []
    for k in range(f):
        for ch in range(c):
            x = a[k, :, :, ch]
            y = b[k, :, :, ch]
            mu_x = correlate2d(x, win, mode="valid")
            mu_y = correlate2d(y, win, mode="valid")
            xx = correlate2d(x * x, win, mode="valid")
            yy = correlate2d(y * y, win, mode="valid")
            xy = correlate2d(x * y, win, mode="valid")
            var_x = xx - mu_x * mu_x
            var_y = yy - mu_y * mu_y
            cov = xy - mu_x * mu_y
            num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)
            den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
            scores.append(np.mean(num / den))
    return float(np.mean(scores))


def smoothness_proxy(v) -> float:
    """Mean squared second temporal difference; 0 on any video whose frames
    are affine in time."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape[0] < 3:
        raise ValueError("smoothness proxy needs at least 3 frames")
    d2 = v[2:] - 2.0 * v[1:-1] + v[:-2]
    return float(np.mean(d2**2))


def albedo_preservation(pred, gt, mask) -> float:
    """Mean absolute chroma error inside the mask; chroma is value over
    (mean-channel luma + eps), so pure brightness changes nearly cancel."""
    pred, gt = _check_pair(pred, gt)
    mask = np.asarray(mask, dtype=np.float64)
    if mask.shape != pred.shape[:-1]:
        raise ValueError(f"mask shape {mask.shape} != video shape {pred.shape[:-1]}")
    if mask.sum() == 0:
        raise ValueError("empty mask")

    def chroma(v):
        luma = v.mean(axis=-1, keepdims=True)
        return v / (luma + CHROMA_EPS)

    diff = np.abs(chroma(pred) - chroma(gt))
    weights = np.broadcast_to(mask[..., None], diff.shape)
    return float((diff * weights).sum() / weights.sum())
