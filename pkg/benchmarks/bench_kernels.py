"""Time each hot kernel under the numpy and numba backends.

    python3 benchmarks/bench_kernels.py [--size 1024] [--repeat 5]

Numba compile time is excluded: every kernel runs once before timing.
"""

import argparse
import time

import numpy as np

from flickerband import kernels
from flickerband.isp import IspParams


def best_of(fn, repeat):
    fn()  # warm-up / JIT
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times) * 1e3


def cases(size):
    rng = np.random.default_rng(0)
    img = rng.random((3, size, size))
    mask, eta = rng.random((2, size, size))
    p = IspParams.randomized(rng)
    ccm, inv = np.array(p.ccm), np.linalg.inv(np.array(p.ccm))
    wb = np.array(p.wb_gains)
    shift = rng.uniform(-3, 3, size)
    fu = fv = np.fft.fftfreq(size)
    feats = rng.standard_normal((256, (size // 8) ** 2))
    feats_gt = rng.standard_normal(feats.shape)
    th = np.deg2rad(12.0)
    return {
        "stripe_layer": lambda k: k.stripe_layer(size, size, np.cos(th), np.sin(th), 3.0, 40.0,
                                                 0.45, 4.0, shift, 6.0, 150.0),
        "gain_field": lambda k: k.gain_field(mask, eta, 0.4, 0.05),
        "apply_gain": lambda k: k.apply_gain(img, mask),
        "isp_inverse": lambda k: k.isp_inverse(img, inv, wb, 0, 2.2),
        "isp_forward": lambda k: k.isp_forward(img, ccm, wb, 0, 2.2),
        "butterworth_bands": lambda k: k.butterworth_bands(fu, fv, 0.08, 0.45, 4, 1e-6),
        "ta_rows": lambda k: k.ta_rows(feats, feats_gt, 1e-8),
        "ta_grad_rows": lambda k: k.ta_grad_rows(feats, feats_gt, 1e-8),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=1024)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    np_k, nb_k = kernels.get_backend("numpy"), kernels.get_backend("numba")
    print(f"image {args.size}x{args.size}, best of {args.repeat}")
    print(f"{'kernel':<20}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}")
    for name, run in cases(args.size).items():
        t_np = best_of(lambda: run(np_k), args.repeat)
        t_nb = best_of(lambda: run(nb_k), args.repeat)
        print(f"{name:<20}{t_np:12.2f}{t_nb:12.2f}{t_np / t_nb:9.1f}x")


if __name__ == "__main__":
    main()
