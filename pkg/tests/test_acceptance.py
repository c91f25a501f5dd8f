"""End-to-end acceptance checks.

Each test prints one ``[PASS]``/``[FAIL]`` line and adds it to the terminal
summary. Thresholds and time limits are part of the check.
"""

import itertools
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, natural_images
from _oracles import (SHARED, fd_gradient, make_inputs, row_autocorr_period, tree_bytes,
                      unclipped_image)
from flickerband.banding import (BandingSpec, Pattern, gain_formula, generate_mask, mask_to_gain,
                                 stripe_eta, synthesize_pair)
from flickerband.cli import main
from flickerband.imagecore import ImagePlanes
from flickerband.isp import IspParams, forward_isp, inverse_isp
from flickerband.metrics import gmsd, ms_ssim, psnr, ssim
from flickerband.specband import (build_partition, butterworth_lp, radial_frequency,
                                  recompose_array)
from flickerband.traj import FeatureStack, layer_ta_loss, ta_loss_grad


@contextmanager
def criterion(tag, text, limit_s=None):
    t0 = time.perf_counter()
    ok = False
    try:
        yield
        ok = True
    finally:
        elapsed = time.perf_counter() - t0
        timing = f"{elapsed:.2f}s" + (f" / limit {limit_s:g}s" if limit_s else "")
        if ok and limit_s is not None and elapsed > limit_s:
            ok = False
            timing += " (too slow)"
        line = f"[{'PASS' if ok else 'FAIL'}] {tag} {text} ({timing})"
        ACCEPTANCE_LINES.append(line)
        print(line)
    assert ok, line


def test_ac1_butterworth_identities():
    with criterion("AC1", "Butterworth identities", 1.0):
        for rho, n in itertools.product((0.05, 0.3, 0.9), (1, 2, 4, 8)):
            assert abs(butterworth_lp(0.0, rho, n, 1e-6) - 1.0) < 1e-9
            assert abs(butterworth_lp(rho, rho, n, 0.0) - 0.5) < 1e-9
        for rho in (0.05, 0.3, 0.9):
            assert abs(butterworth_lp(2 * rho, rho, 4, 0.0) - 1 / 257) < 1e-9


def test_ac2_partition_of_unity():
    with criterion("AC2", "partition of unity on 64x64, 257x512, 1024x768", 5.0):
        for h, w in ((64, 64), (257, 512), (1024, 768)):
            p = build_partition(h, w)
            assert np.max(np.abs(p.masks.sum(axis=0) - 1.0)) < 1e-6


def test_ac3_fs_identity():
    with criterion("AC3", "unit-weight recomposition > 60 dB on 20 images", 10.0):
        rng = np.random.default_rng(3)
        part = build_partition(256, 256, weights=(1, 1, 1))
        worst = math.inf
        for _ in range(20):
            x = rng.random((3, 256, 256))
            worst = min(worst, psnr(recompose_array(x, part), x))
        assert worst > 60


def test_ac4_mid_band_suppression():
    with criterion("AC4", "mid-band sinusoid keeps <= 10% energy under (1,0,1)", 5.0):
        h = w = 256
        cycles = 48
        part = build_partition(h, w, weights=(1, 0, 1))
        d = radial_frequency(h, w)[0, cycles]
        lo = butterworth_lp(d, part.rho1_scaled, part.order_n, part.eps)
        lp2 = butterworth_lp(d, part.rho2_scaled, part.order_n, part.eps)
        assert (lp2 - lo) ** 2 > 0.9  # the bin sits in the mid band
        x = 0.5 + 0.4 * np.sin(2 * np.pi * cycles * np.arange(w) / w)
        img = np.broadcast_to(x, (3, h, w))
        out = recompose_array(img, part)
        e_in = np.abs(np.fft.fft2(img)[:, 0, cycles]) ** 2
        e_out = np.abs(np.fft.fft2(out)[:, 0, cycles]) ** 2
        assert np.all(e_out <= 0.1 * e_in)


def test_ac5_resolution_law():
    with criterion("AC5", "cutoff halves at four times the reference size"):
        for m0 in (256, 512, 1000):
            p = build_partition(4 * m0, 4 * m0 + 7, ref_size_m0=m0)
            assert p.rho1_scaled == p.rho1 / 2
            assert p.rho2_scaled == p.rho2 / 2


def test_ac6_isp_roundtrip():
    with criterion("AC6", "ISP round trip < 1e-5 on 20 unclipped images", 5.0):
        rng = np.random.default_rng(6)
        worst = 0.0
        for i in range(20):
            p = IspParams() if i % 2 else IspParams.randomized(rng)
            x = unclipped_image(rng, p, (3, 64, 64))
            raw, clipped = inverse_isp(x, p, return_clipped=True)
            assert clipped == 0
            worst = max(worst, float(np.max(np.abs(forward_isp(raw, p).data - x.data))))
        assert worst < 1e-5


def test_ac7_gain_model():
    with criterion("AC7", "gain substitution cases and bounds over 1e6 draws", 30.0):
        # no stripe
        spec = BandingSpec(jitter_amp=0.3, seed=1)
        assert np.all(np.abs(mask_to_gain(np.zeros((16, 16)), spec).values - 1.0) < 1e-9)
        # direct substitution
        spec = BandingSpec(darkness=0.3, jitter_amp=0.0, gain_floor=0.05)
        assert np.all(np.abs(mask_to_gain(np.ones((16, 16)), spec).values - 0.3) < 1e-9)
        # floor clamp, with eta at the top of its range
        assert abs(gain_formula(1.0, 0.0, 1.5, 0.05) - 0.05) < 1e-9
        spec = BandingSpec(darkness=0.0, jitter_amp=0.5, gain_floor=0.05, period_px=8, seed=2)
        g = mask_to_gain(np.ones((400, 8)), spec).values
        eta = stripe_eta(spec, 400, 8)
        assert np.all(np.abs(g - np.maximum(0.05, 1 - eta)) < 1e-9)
        assert np.any(eta > 0.95) and np.all(g[eta > 0.95] == 0.05)

        rng = np.random.default_rng(7)
        n = 1_000_000
        floor = rng.uniform(0.01, 0.5, n)
        vals = gain_formula(rng.random(n), rng.uniform(0, 0.999, n), rng.uniform(0, 2, n), floor)
        assert np.all(vals >= floor) and np.all(vals <= 1.0)
        for i, pattern in enumerate(Pattern):
            s = BandingSpec(pattern=pattern, **dict(SHARED, jitter_amp=0.9, seed=i))
            gf = mask_to_gain(generate_mask(s, 128, 128), s)
            assert gf.values.min() >= s.gain_floor and gf.values.max() <= 1.0


def test_ac8_degradation_realism():
    with criterion("AC8", "SIMPLE banding on 10 natural images: ms-ssim < 0.99, period found", 60.0):
        rng = np.random.default_rng(8)
        hits = 0
        for name, img in natural_images():
            period = int(rng.integers(20, 49))
            spec = BandingSpec(pattern=Pattern.SIMPLE, period_px=period, darkness=0.4,
                               seed=int(rng.integers(2**32)))
            deg, _ = synthesize_pair(img, spec)
            assert ms_ssim(deg, img) < 0.99, name
            found = row_autocorr_period(deg)
            hits += found is not None and abs(found - period) <= 1
        assert hits >= 9


def test_ac9_determinism(tmp_path):
    with criterion("AC9", "synth byte-identical across runs with 1 and 8 workers"):
        src = make_inputs(tmp_path / "clean", n=10)
        outs = []
        for i, workers in enumerate((1, 8, 8, 1)):
            out = tmp_path / f"run{i}"
            assert main(["synth", "--input", str(src), "--output", str(out), "--seed", "2024",
                         "--workers", str(workers)]) == 0
            outs.append(tree_bytes(out))
        assert len(outs[0]) == 11
        assert all(o == outs[0] for o in outs[1:])


def test_ac10_ta_loss():
    with criterion("AC10", "TA loss range, extremes, scale invariance, gradient check", 60.0):
        rng = np.random.default_rng(10)
        for _ in range(100):
            a, b = rng.standard_normal((2, 2, 3, 4, 4))
            fa, fb = FeatureStack(a), FeatureStack(b)
            v = layer_ta_loss(fa, fb)
            assert 0.0 <= v <= 2.0
            assert abs(layer_ta_loss(fb, FeatureStack(b.copy()))) < 1e-6
            assert abs(layer_ta_loss(FeatureStack(-b), fb) - 2.0) < 1e-6
            for alpha in (0.1, 10.0):
                assert abs(layer_ta_loss(FeatureStack(alpha * a), fb) - v) < 1e-5
            g = ta_loss_grad(fa, fb)
            fd = fd_gradient(a, b)
            sel = np.abs(g) > 1e-6
            assert np.max(np.abs(g[sel] - fd[sel]) / np.abs(g[sel])) < 1e-3


def test_ac11_metrics_sanity():
    with criterion("AC11", "metric identities, 20 dB example and symmetry"):
        x = natural_images()[2][1]
        noise = np.random.default_rng(11).normal(0, 0.05, x.data.shape)
        y = ImagePlanes(np.clip(x.data + noise, 0, 1))
        assert abs(ssim(x, x) - 1) < 1e-7
        assert abs(ms_ssim(x, x) - 1) < 1e-7
        assert abs(gmsd(x, x)) < 1e-7
        zero, tenth = np.zeros((3, 16, 16)), np.full((3, 16, 16), 0.1)
        assert abs(psnr(zero, tenth) - 20.0) < 1e-6
        for fn in (psnr, ssim, ms_ssim, gmsd):
            assert abs(fn(x, y) - fn(y, x)) < 1e-7


def test_ac12_family_distinctness():
    with criterion("AC12", "five families pairwise L1 > 0.01*H*W at 512x512"):
        h = w = 512
        masks = {p: generate_mask(BandingSpec(pattern=p, **SHARED), h, w) for p in Pattern}
        for a, b in itertools.combinations(Pattern, 2):
            dist = float(np.sum(np.abs(masks[a] - masks[b])))
            assert dist > 0.01 * h * w, (a, b, dist)
