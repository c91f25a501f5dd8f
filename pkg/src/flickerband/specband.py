"""Butterworth three-band frequency decomposition and weighted recomposition.

Frequencies are per-axis cycles/pixel in [-0.5, 0.5); the radial coordinate
is ``d = sqrt(2) * sqrt(fu**2 + fv**2)`` so ``d = 1`` at the corner Nyquist
bin and masks are isotropic in pixel units whatever the aspect ratio.
Cutoffs scale with image size as ``rho * sqrt(m0 / min(H, W))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .imagecore import ImagePlanes

DEFAULT_RHO1 = 0.08
DEFAULT_RHO2 = 0.45
DEFAULT_ORDER = 4
DEFAULT_EPS = 1e-6
DEFAULT_M0 = 512
DEFAULT_WEIGHTS = (1.0, 0.35, 1.0)

BAND_NAMES = ("low", "mid", "high")


def butterworth_lp(d, rho: float, order_n: int, eps: float = 0.0):
    """``1 / (1 + (d / (rho + eps)) ** (2 n))``; works on scalars and arrays."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    return 1.0 / (1.0 + (np.asarray(d, dtype=np.float64) / (rho + eps)) ** (2 * order_n))


def scaled_cutoff(rho: float, size: int, ref_size_m0: int) -> float:
    return rho * math.sqrt(ref_size_m0 / size)


def radial_frequency(height: int, width: int) -> np.ndarray:
    """Normalized radial distance for every bin in numpy FFT order."""
    fu = np.fft.fftfreq(height)
    fv = np.fft.fftfreq(width)
    return math.sqrt(2.0) * np.sqrt(fu[:, None] ** 2 + fv[None, :] ** 2)


@dataclass(frozen=True, eq=False)
class BandPartition:
    height: int
    width: int
    rho1: float
    rho2: float
    rho1_scaled: float
    rho2_scaled: float
    order_n: int
    eps: float
    weights: tuple[float, float, float]
    ref_size_m0: int
    masks: np.ndarray  # (3, H, W) in numpy FFT order: low, mid, high

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    def check(self, shape) -> None:
        if tuple(shape[-2:]) != self.shape:
            raise ValueError(f"partition built for {self.shape}, got image {tuple(shape[-2:])}")

    def params(self) -> dict:
        return {
            "rho1": self.rho1, "rho2": self.rho2, "order_n": self.order_n, "eps": self.eps,
            "weights": list(self.weights), "ref_size_m0": self.ref_size_m0,
        }


def build_partition(height: int, width: int, rho1: float = DEFAULT_RHO1,
                    rho2: float = DEFAULT_RHO2, order_n: int = DEFAULT_ORDER,
                    eps: float = DEFAULT_EPS, weights=DEFAULT_WEIGHTS,
                    ref_size_m0: int = DEFAULT_M0) -> BandPartition:
    if not 0 < rho1 < rho2 <= 1:
        raise ValueError(f"need 0 < rho1 < rho2 <= 1, got rho1={rho1}, rho2={rho2}")
    if order_n < 1 or int(order_n) != order_n:
        raise ValueError("order_n must be a positive integer")
    if eps < 0:
        raise ValueError("eps must be non-negative")
    weights = tuple(float(w) for w in weights)
    if len(weights) != 3 or min(weights) < 0:
        raise ValueError("weights must be 3 non-negative reals")
    if ref_size_m0 <= 0:
        raise ValueError("ref_size_m0 must be positive")
    m = min(height, width)
    r1 = scaled_cutoff(rho1, m, ref_size_m0)
    r2 = scaled_cutoff(rho2, m, ref_size_m0)
    masks = kernels.butterworth_bands(np.fft.fftfreq(height), np.fft.fftfreq(width),
                                      r1, r2, int(order_n), float(eps))
    masks.setflags(write=False)
    return BandPartition(height, width, float(rho1), float(rho2), r1, r2, int(order_n),
                         float(eps), weights, int(ref_size_m0), masks)


class BandComponents(NamedTuple):
    """Band-limited parts of an image. Not range-limited, so plain arrays."""

    low: np.ndarray
    mid: np.ndarray
    high: np.ndarray


def _rfft_masks(partition: BandPartition) -> np.ndarray:
    return partition.masks[:, :, : partition.width // 2 + 1]


def _as_array(img) -> np.ndarray:
    return img.data if isinstance(img, ImagePlanes) else np.asarray(img, dtype=np.float64)


def decompose(img, partition: BandPartition | None = None) -> BandComponents:
    """Split an image (``ImagePlanes`` or ``(..., H, W)`` array) into three bands."""
    x = _as_array(img)
    if partition is None:
        partition = build_partition(*x.shape[-2:])
    partition.check(x.shape)
    spec = np.fft.rfft2(x)
    masks = _rfft_masks(partition)
    s = x.shape[-2:]
    parts = [np.fft.irfft2(spec * masks[b], s=s) for b in range(3)]
    return BandComponents(*parts)


def recompose_array(x, partition: BandPartition, weights=None) -> np.ndarray:
    """Weighted recomposition without clipping."""
    x = _as_array(x)
    partition.check(x.shape)
    w = partition.weights if weights is None else tuple(float(v) for v in weights)
    combined = np.tensordot(np.asarray(w), _rfft_masks(partition), axes=1)
    return np.fft.irfft2(np.fft.rfft2(x) * combined, s=x.shape[-2:])


def recompose(img: ImagePlanes, partition: BandPartition | None = None, weights=None) -> ImagePlanes:
    """Weighted band recomposition, clipped to [0, 1]; keeps the domain tag."""
    if partition is None:
        partition = build_partition(img.height, img.width)
    out = recompose_array(img.data, partition, weights)
    return img.with_data(np.clip(out, 0.0, 1.0))


def band_energies(img, partition: BandPartition) -> dict:
    """Energy of each band component (Parseval-normalized), per channel and in total.

    Cross terms between overlapping bands mean the three energies need not
    sum to ``total_energy``.
    """
    x = _as_array(img)
    partition.check(x.shape)
    power = np.abs(np.fft.fft2(x)) ** 2 / (x.shape[-1] * x.shape[-2])
    per_band = {}
    total = float(power.sum())
    for name, mask in zip(BAND_NAMES, partition.masks):
        e = power * mask**2
        per_channel = e.reshape(e.shape[0], -1).sum(axis=1) if e.ndim == 3 else np.array([e.sum()])
        per_band[name] = {
            "energy": float(e.sum()),
            "fraction": float(e.sum() / total) if total > 0 else 0.0,
            "per_channel": [float(v) for v in per_channel],
        }
    return {"total_energy": total, "bands": per_band,
            "rho_scaled": [partition.rho1_scaled, partition.rho2_scaled]}
