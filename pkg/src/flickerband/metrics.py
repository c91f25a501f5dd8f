"""Full-reference image quality metrics: PSNR, SSIM, MS-SSIM, GMSD.

SSIM-family metrics and GMSD work on luma (0.299 R + 0.587 G + 0.114 B) with
a data range of 1. Settings follow the canonical published definitions:
11x11 Gaussian window (sigma 1.5), K1 = 0.01, K2 = 0.03, five MS-SSIM scales,
and GMSD with c = 0.0026 on a [0, 1] scale.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy import ndimage

from .imagecore import ImagePlanes

log = logging.getLogger(__name__)

PSNR_CAP_DB = 99.0
LUMA = np.array([0.299, 0.587, 0.114])
K1, K2 = 0.01, 0.03
WIN_SIZE, WIN_SIGMA = 11, 1.5
MS_WEIGHTS = np.array([0.0448, 0.2856, 0.3001, 0.2363, 0.1333])
GMSD_C = 0.0026


@dataclass
class MetricReport:
    psnr_db: float
    ssim: float
    ms_ssim: float
    gmsd: float
    # filled from external tools when available
    lpips: Optional[float] = None
    dists: Optional[float] = None
    fsim: Optional[float] = None
    name: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def _arr(x) -> np.ndarray:
    return x.data if isinstance(x, ImagePlanes) else np.asarray(x, dtype=np.float64)


def _pair(a, b):
    a, b = _arr(a), _arr(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def luma(x) -> np.ndarray:
    x = _arr(x)
    if x.ndim == 2:
        return x
    return np.tensordot(LUMA, x, axes=1)


def psnr(a, b) -> float:
    a, b = _pair(a, b)
    err = float(np.mean((a - b) ** 2))
    if err == 0.0:
        return PSNR_CAP_DB
    return min(PSNR_CAP_DB, 10.0 * math.log10(1.0 / err))


def _gauss_taps() -> np.ndarray:
    r = np.arange(WIN_SIZE) - (WIN_SIZE - 1) / 2
    g = np.exp(-(r ** 2) / (2 * WIN_SIGMA ** 2))
    return g / g.sum()


_TAPS = _gauss_taps()


def _filter_valid(x: np.ndarray) -> np.ndarray:
    y = ndimage.correlate1d(x, _TAPS, axis=0, mode="constant")
    y = ndimage.correlate1d(y, _TAPS, axis=1, mode="constant")
    p = WIN_SIZE // 2
    return y[p:-p, p:-p]


def _ssim_terms(x: np.ndarray, y: np.ndarray):
    """Mean SSIM and mean contrast-structure term over the valid window region."""
    c1, c2 = K1 ** 2, K2 ** 2
    mx, my = _filter_valid(x), _filter_valid(y)
    sxx = _filter_valid(x * x) - mx * mx
    syy = _filter_valid(y * y) - my * my
    sxy = _filter_valid(x * y) - mx * my
    cs = (2 * sxy + c2) / (sxx + syy + c2)
    lum = (2 * mx * my + c1) / (mx * mx + my * my + c1)
    return float(np.mean(lum * cs)), float(np.mean(cs))


def ssim(a, b) -> float:
    a, b = _pair(a, b)
    x, y = luma(a), luma(b)
    if min(x.shape) < WIN_SIZE:
        raise ValueError(f"SSIM needs images of at least {WIN_SIZE}x{WIN_SIZE}")
    return _ssim_terms(x, y)[0]


def _halve(x: np.ndarray) -> np.ndarray:
    h, w = (x.shape[0] // 2) * 2, (x.shape[1] // 2) * 2
    x = x[:h, :w]
    return 0.25 * (x[0::2, 0::2] + x[1::2, 0::2] + x[0::2, 1::2] + x[1::2, 1::2])


def ms_scales(height: int, width: int) -> int:
    """Number of scales that keep the coarsest level at least one window wide."""
    m = min(height, width)
    n = len(MS_WEIGHTS)
    while n > 1 and m // 2 ** (n - 1) < WIN_SIZE:
        n -= 1
    return n


def ms_ssim(a, b) -> float:
    """Multi-scale SSIM with 2x2 average downsampling between scales.

    Below 176 px the scale count drops and the remaining weights are
    renormalized. Negative contrast terms are clamped to 0 before the
    fractional powers.
    """
    a, b = _pair(a, b)
    x, y = luma(a), luma(b)
    if min(x.shape) < WIN_SIZE:
        raise ValueError(f"MS-SSIM needs images of at least {WIN_SIZE}x{WIN_SIZE}")
    n = ms_scales(*x.shape)
    weights = MS_WEIGHTS[:n]
    if n < len(MS_WEIGHTS):
        log.info("image %s too small for %d MS-SSIM scales; using %d", x.shape, len(MS_WEIGHTS), n)
        weights = weights / weights.sum()
    vals = []
    for i in range(n):
        s, cs = _ssim_terms(x, y)
        vals.append(s if i == n - 1 else cs)
        if i < n - 1:
            x, y = _halve(x), _halve(y)
    vals = np.maximum(np.array(vals), 0.0)
    return float(np.prod(vals ** weights))


_PREWITT_X = np.array([[1.0, 0.0, -1.0]] * 3) / 3.0
_PREWITT_Y = _PREWITT_X.T


def gmsd(a, b) -> float:
    """Gradient magnitude similarity deviation (0 for identical images)."""
    a, b = _pair(a, b)
    x, y = luma(a), luma(b)
    ave = np.full((2, 2), 0.25)
    x = ndimage.correlate(x, ave, mode="constant")[::2, ::2]
    y = ndimage.correlate(y, ave, mode="constant")[::2, ::2]

    def grad_mag(z):
        gx = ndimage.correlate(z, _PREWITT_X, mode="constant")
        gy = ndimage.correlate(z, _PREWITT_Y, mode="constant")
        return np.sqrt(gx * gx + gy * gy)

    gx, gy = grad_mag(x), grad_mag(y)
    gms = (2 * gx * gy + GMSD_C) / (gx * gx + gy * gy + GMSD_C)
    return float(np.std(gms, ddof=1))


def report(restored, reference, name: str = "") -> MetricReport:
    return MetricReport(psnr_db=psnr(restored, reference), ssim=ssim(restored, reference),
                        ms_ssim=ms_ssim(restored, reference), gmsd=gmsd(restored, reference),
                        name=name)
