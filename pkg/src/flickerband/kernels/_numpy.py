"""Pure-numpy kernels.

Every function here has a loop-level twin in ``_numba`` with the same
signature and semantics. Keep the two in lockstep.
"""

import numpy as np

NAME = "numpy"


def _smoothstep(t):
    return t * t * (3.0 - 2.0 * t)


def _feather(p, period, duty, feather):
    width = duty * period
    if feather <= 0.0:
        return (p < width).astype(np.float64)
    inside = p < width
    dist = np.where(inside, np.minimum(p, width - p), -np.minimum(p - width, period - p))
    t = np.clip(dist / feather + 0.5, 0.0, 1.0)
    return _smoothstep(t)


def stripe_layer(h, w, cos_t, sin_t, phase, period, duty, feather, row_shift,
                 curve_amp, curve_wl):
    """One feathered stripe field.

    Returns ``(mask, k, cell)``: mask in [0, 1], the stripe index and the
    along-stripe cell index (cells are ``period`` long) per pixel.
    """
    y = np.arange(h, dtype=np.float64)[:, None]
    x = np.arange(w, dtype=np.float64)[None, :]
    s = y * cos_t + x * sin_t + phase + row_shift[:, None]
    t = x * cos_t - y * sin_t
    if curve_amp > 0.0 and curve_wl > 0.0:
        s = s + curve_amp * np.sin(2.0 * np.pi * t / curve_wl)
    kf = np.floor(s / period)
    p = s - kf * period
    # s / period can round across an integer; pull p back into [0, period)
    low = p < 0.0
    p = np.where(low, p + period, p)
    kf = np.where(low, kf - 1.0, kf)
    high = p >= period
    p = np.where(high, p - period, p)
    kf = np.where(high, kf + 1.0, kf)
    mask = _feather(p, period, duty, feather)
    cell = np.floor(t / period)
    return mask, kf.astype(np.int64), cell.astype(np.int64)


def gain_field(mask, eta, darkness, gain_floor):
    """Elementwise ``max(floor, 1 - mask * (1 - darkness) * eta)``.

    All four arguments broadcast against each other.
    """
    return np.maximum(gain_floor, 1.0 - mask * (1.0 - darkness) * eta)


def apply_gain(img, gain):
    return np.clip(img * gain[None, :, :], 0.0, 1.0)


def _srgb_decode(v):
    return np.where(v <= 0.04045, v / 12.92, ((v + 0.055) / 1.055) ** 2.4)


def _srgb_encode(v):
    return np.where(v <= 0.0031308, v * 12.92,
                    1.055 * np.power(np.maximum(v, 0.0031308), 1.0 / 2.4) - 0.055)


def _clip_count(pre):
    bad = (pre < 0.0) | (pre > 1.0)
    return int(np.count_nonzero(bad.any(axis=0)))


def isp_inverse(img, inv_ccm, wb, mode, gamma):
    """sRGB -> linear pseudo-RAW. ``mode`` 0 is the sRGB curve, 1 a pure power."""
    if mode == 0:
        lin = _srgb_decode(img)
    else:
        lin = img ** gamma
    raw = np.einsum("ij,jhw->ihw", inv_ccm, lin) / wb[:, None, None]
    return np.clip(raw, 0.0, 1.0), _clip_count(raw)


def isp_forward(raw, ccm, wb, mode, gamma):
    lin = np.einsum("ij,jhw->ihw", ccm, raw * wb[:, None, None])
    count = _clip_count(lin)
    lin = np.clip(lin, 0.0, 1.0)
    if mode == 0:
        out = _srgb_encode(lin)
    else:
        out = lin ** (1.0 / gamma)
    return np.clip(out, 0.0, 1.0), count


def butterworth_bands(fu, fv, rho1, rho2, order_n, eps):
    """Low/mid/high Butterworth masks over the per-axis frequency vectors.

    ``fu`` and ``fv`` are cycles/pixel along rows and columns.
    """
    d = np.sqrt(2.0) * np.sqrt(fu[:, None] ** 2 + fv[None, :] ** 2)
    lo = 1.0 / (1.0 + (d / (rho1 + eps)) ** (2 * order_n))
    lp2 = 1.0 / (1.0 + (d / (rho2 + eps)) ** (2 * order_n))
    return np.stack([lo, lp2 - lo, 1.0 - lp2])


def normalize_rows(x, eps):
    norm = np.sqrt(np.sum(x * x, axis=1))
    return x / (norm + eps)[:, None]


def ta_rows(lq, gt, eps):
    """Per-row cosine distance ``1 - <lq_hat, gt_hat>``."""
    return 1.0 - np.sum(normalize_rows(lq, eps) * normalize_rows(gt, eps), axis=1)


def ta_grad_rows(lq, gt, eps):
    """Gradient of ``sum(ta_rows)`` with respect to ``lq``."""
    g = normalize_rows(gt, eps)
    norm = np.sqrt(np.sum(lq * lq, axis=1))
    r = norm + eps
    dot = np.sum(lq * g, axis=1)
    safe = np.where(norm > 0.0, norm, 1.0)
    radial = np.where(norm > 0.0, dot / (r * r * safe), 0.0)
    return -(g / r[:, None] - lq * radial[:, None])
