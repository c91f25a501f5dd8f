"""Numba kernels, loop-for-loop twins of ``_numpy``.

No ``fastmath``: the synthesis path must be reproducible run to run.
"""

import math

import numpy as np
from numba import njit

NAME = "numba"


@njit(cache=True)
def _feather1(p, period, duty, feather):
    width = duty * period
    if feather <= 0.0:
        return 1.0 if p < width else 0.0
    if p < width:
        dist = min(p, width - p)
    else:
        dist = -min(p - width, period - p)
    t = dist / feather + 0.5
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    return t * t * (3.0 - 2.0 * t)


@njit(cache=True)
def stripe_layer(h, w, cos_t, sin_t, phase, period, duty, feather, row_shift,
                 curve_amp, curve_wl):
    mask = np.empty((h, w))
    k = np.empty((h, w), dtype=np.int64)
    cell = np.empty((h, w), dtype=np.int64)
    curved = curve_amp > 0.0 and curve_wl > 0.0
    for i in range(h):
        y = float(i)
        for j in range(w):
            x = float(j)
            s = y * cos_t + x * sin_t + phase + row_shift[i]
            t = x * cos_t - y * sin_t
            if curved:
                s = s + curve_amp * np.sin(2.0 * np.pi * t / curve_wl)
            kf = math.floor(s / period)
            p = s - kf * period
            if p < 0.0:
                p += period
                kf -= 1.0
            elif p >= period:
                p -= period
                kf += 1.0
            mask[i, j] = _feather1(p, period, duty, feather)
            k[i, j] = np.int64(kf)
            cell[i, j] = np.int64(math.floor(t / period))
    return mask, k, cell


@njit(cache=True)
def _gain_flat(mask, eta, darkness, gain_floor, out):
    for i in range(out.size):
        g = 1.0 - mask[i] * (1.0 - darkness[i]) * eta[i]
        out[i] = g if g > gain_floor[i] else gain_floor[i]


def gain_field(mask, eta, darkness, gain_floor):
    m, e, d, f = np.broadcast_arrays(*(np.asarray(a, dtype=np.float64)
                                       for a in (mask, eta, darkness, gain_floor)))
    out = np.empty(m.shape)
    _gain_flat(np.ascontiguousarray(m).ravel(), np.ascontiguousarray(e).ravel(),
               np.ascontiguousarray(d).ravel(), np.ascontiguousarray(f).ravel(),
               out.reshape(-1))
    return out


@njit(cache=True)
def apply_gain(img, gain):
    c, h, w = img.shape
    out = np.empty_like(img)
    for ch in range(c):
        for i in range(h):
            for j in range(w):
                v = img[ch, i, j] * gain[i, j]
                if v < 0.0:
                    v = 0.0
                elif v > 1.0:
                    v = 1.0
                out[ch, i, j] = v
    return out


@njit(cache=True)
def _decode(v, mode, gamma):
    if mode == 0:
        if v <= 0.04045:
            return v / 12.92
        return ((v + 0.055) / 1.055) ** 2.4
    return v ** gamma


@njit(cache=True)
def _encode(v, mode, gamma):
    if mode == 0:
        if v <= 0.0031308:
            return v * 12.92
        return 1.055 * v ** (1.0 / 2.4) - 0.055
    return v ** (1.0 / gamma)


@njit(cache=True)
def isp_inverse(img, inv_ccm, wb, mode, gamma):
    _, h, w = img.shape
    out = np.empty_like(img)
    lin = np.empty(3)
    count = 0
    for i in range(h):
        for j in range(w):
            for c in range(3):
                lin[c] = _decode(img[c, i, j], mode, gamma)
            clipped = False
            for c in range(3):
                v = (inv_ccm[c, 0] * lin[0] + inv_ccm[c, 1] * lin[1]
                     + inv_ccm[c, 2] * lin[2]) / wb[c]
                if v < 0.0:
                    v = 0.0
                    clipped = True
                elif v > 1.0:
                    v = 1.0
                    clipped = True
                out[c, i, j] = v
            if clipped:
                count += 1
    return out, count


@njit(cache=True)
def isp_forward(raw, ccm, wb, mode, gamma):
    _, h, w = raw.shape
    out = np.empty_like(raw)
    scaled = np.empty(3)
    count = 0
    for i in range(h):
        for j in range(w):
            for c in range(3):
                scaled[c] = raw[c, i, j] * wb[c]
            clipped = False
            for c in range(3):
                v = ccm[c, 0] * scaled[0] + ccm[c, 1] * scaled[1] + ccm[c, 2] * scaled[2]
                if v < 0.0:
                    v = 0.0
                    clipped = True
                elif v > 1.0:
                    v = 1.0
                    clipped = True
                v = _encode(v, mode, gamma)
                out[c, i, j] = min(max(v, 0.0), 1.0)
            if clipped:
                count += 1
    return out, count


@njit(cache=True)
def butterworth_bands(fu, fv, rho1, rho2, order_n, eps):
    h = fu.size
    w = fv.size
    out = np.empty((3, h, w))
    root2 = math.sqrt(2.0)
    p = 2 * order_n
    for i in range(h):
        for j in range(w):
            d = root2 * math.sqrt(fu[i] * fu[i] + fv[j] * fv[j])
            lo = 1.0 / (1.0 + (d / (rho1 + eps)) ** p)
            lp2 = 1.0 / (1.0 + (d / (rho2 + eps)) ** p)
            out[0, i, j] = lo
            out[1, i, j] = lp2 - lo
            out[2, i, j] = 1.0 - lp2
    return out


@njit(cache=True)
def normalize_rows(x, eps):
    rows, n = x.shape
    out = np.empty_like(x)
    for r in range(rows):
        acc = 0.0
        for i in range(n):
            acc += x[r, i] * x[r, i]
        denom = math.sqrt(acc) + eps
        for i in range(n):
            out[r, i] = x[r, i] / denom
    return out


@njit(cache=True)
def ta_rows(lq, gt, eps):
    a = normalize_rows(lq, eps)
    b = normalize_rows(gt, eps)
    rows, n = a.shape
    out = np.empty(rows)
    for r in range(rows):
        acc = 0.0
        for i in range(n):
            acc += a[r, i] * b[r, i]
        out[r] = 1.0 - acc
    return out


@njit(cache=True)
def ta_grad_rows(lq, gt, eps):
    g = normalize_rows(gt, eps)
    rows, n = lq.shape
    out = np.empty_like(lq)
    for r in range(rows):
        sq = 0.0
        dot = 0.0
        for i in range(n):
            sq += lq[r, i] * lq[r, i]
            dot += lq[r, i] * g[r, i]
        norm = math.sqrt(sq)
        rr = norm + eps
        radial = dot / (rr * rr * norm) if norm > 0.0 else 0.0
        for i in range(n):
            out[r, i] = -(g[r, i] / rr - lq[r, i] * radial)
    return out
