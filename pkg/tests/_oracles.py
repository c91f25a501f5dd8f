"""Independent reference computations shared by the unit and acceptance tests."""

import math

import numpy as np

from flickerband.imagecore import ImagePlanes, save_image
from flickerband.traj import FeatureStack, layer_ta_loss

# one geometry used to compare the five banding families
SHARED = dict(period_px=40.0, duty=0.4, phase_px=3.0, orientation_deg=10.0, feather_px=4.0,
              darkness=0.4, jitter_amp=0.2, curve_amp_px=8.0, curve_wavelength_px=160.0,
              crack_density=0.4, seed=99)


def bw(d, rho, n, eps=0.0):
    """Scalar Butterworth low-pass."""
    return 1.0 / (1.0 + (d / (rho + eps)) ** (2 * n))


def srgb_eotf(v):
    return v / 12.92 if v <= 0.04045 else ((v + 0.055) / 1.055) ** 2.4


def srgb_oetf(v):
    return 12.92 * v if v <= 0.0031308 else 1.055 * v ** (1 / 2.4) - 0.055


def unclipped_image(rng, p, shape=(3, 16, 16)):
    """Random sRGB image whose pseudo-RAW stays strictly inside [0, 1] under ``p``."""
    # near-gray pixels: rows of the ccm sum to 1, so mixing stays positive
    raw = rng.uniform(0.1, 0.5, (1,) + shape[1:]) + rng.uniform(-0.03, 0.03, shape)
    lin = np.einsum("ij,jhw->ihw", np.array(p.ccm), raw * np.array(p.wb_gains)[:, None, None])
    assert lin.min() > 0 and lin.max() < 1
    return ImagePlanes(np.vectorize(srgb_oetf)(lin))


def row_autocorr_period(img, max_lag=None):
    """Lag of the strongest autocorrelation peak of the detrended row-luma profile."""
    y = np.tensordot([0.299, 0.587, 0.114], img.data, axes=1).mean(axis=1)
    n = y.size
    t = np.arange(n)
    y = y - np.polyval(np.polyfit(t, y, 1), t)
    ac = np.array([np.dot(y[: n - k], y[k:]) / n for k in range(n)])
    max_lag = max_lag or n // 2
    peaks = [k for k in range(2, max_lag) if ac[k] >= ac[k - 1] and ac[k] >= ac[k + 1] and ac[k] > 0]
    return max(peaks, key=lambda k: ac[k]) if peaks else None


def fd_gradient(lq, gt, step=1e-3):
    """Central finite differences of the layer loss with respect to ``lq``."""
    g = np.empty_like(lq)
    it = np.nditer(lq, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        up, dn = lq.copy(), lq.copy()
        up[idx] += step
        dn[idx] -= step
        g[idx] = (layer_ta_loss(FeatureStack(up), FeatureStack(gt))
                  - layer_ta_loss(FeatureStack(dn), FeatureStack(gt))) / (2 * step)
    return g


def naive_psnr(a, b):
    acc = 0.0
    for u, v in zip(np.ravel(a), np.ravel(b)):
        acc += (u - v) ** 2
    return 10 * math.log10(1.0 / (acc / np.size(a)))


def make_inputs(directory, n=10, size=64, seed=0):
    """Smooth random test images written as 8-bit PNGs."""
    directory.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:size, 0:size] / size
    for i in range(n):
        a = rng.uniform(0.2, 0.8, 3)[:, None, None]
        b = rng.uniform(-0.2, 0.2, (2, 3))[:, :, None, None]
        data = np.clip(a + b[0] * y + b[1] * x, 0, 1)
        save_image(ImagePlanes(data), directory / f"img_{i:02d}.png")
    return directory


def tree_bytes(directory):
    """File name -> bytes for everything except the config snapshot."""
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir())
            if p.name != "resolved_config.yaml"}
