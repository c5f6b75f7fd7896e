"""Numba vs numpy timings for the hot kernels, plus an end-to-end inversion.

Run: python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import os
import subprocess
import sys
import time

import numpy as np

from tfalg import _kernels


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_cases(rng):
    d = 1
    pa = rng.integers(-40, 40, (300, 2 * d)).astype(float) * 0.125
    pb = rng.integers(-40, 40, (300, 2 * d)).astype(float) * 0.125
    ca = rng.standard_normal(300) + 1j * rng.standard_normal(300)
    cb = rng.standard_normal(300) + 1j * rng.standard_normal(300)
    n = 200_000
    re, im = rng.standard_normal(n), rng.standard_normal(n)
    starts = np.unique(rng.integers(0, n, n // 4))
    starts[0] = 0
    a = (rng.random(4000) < 0.3).astype(float)
    b = (rng.random(3000) < 0.3).astype(float)
    return {
        "twisted_products 300x300": ("twisted_products", (pa, ca, pb, cb, d)),
        "segment_sums 200k": ("segment_sums", (re, im, starts)),
        "convolve_full 4000*3000": ("convolve_full", (a, b)),
    }


def end_to_end(disable_numba):
    env = dict(os.environ, TFALG_DISABLE_NUMBA="1" if disable_numba else "0")
    code = (
        "import time; from tfalg.channel import random_channel; from tfalg.oracle import Grid;"
        "from tfalg.invert import neumann_invert_contraction;"
        "t = random_channel(5, 42, grid=Grid(1, 256, 8.0));"
        "neumann_invert_contraction(t, tol=1e-4);"
        "t0 = time.perf_counter(); neumann_invert_contraction(t, tol=1e-7);"
        "print(time.perf_counter() - t0)"
    )
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip())


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if _kernels.numba is None:
        print("numba not installed; nothing to compare")
        return
    rng = np.random.default_rng(0)
    print(f"{'kernel':28s} {'numpy [ms]':>11s} {'numba [ms]':>11s} {'speedup':>8s}")
    for label, (name, fargs) in kernel_cases(rng).items():
        f_np = getattr(_kernels, f"{name}_numpy")
        f_nb = getattr(_kernels, f"{name}_numba")
        f_nb(*fargs)  # compile
        t_np = best_of(lambda: f_np(*fargs), args.repeat)
        t_nb = best_of(lambda: f_nb(*fargs), args.repeat)
        print(f"{label:28s} {1e3 * t_np:11.2f} {1e3 * t_nb:11.2f} {t_np / t_nb:8.2f}")
    t_np = end_to_end(True)
    t_nb = end_to_end(False)
    print(f"{'invert random k=5 tol 1e-7':28s} {1e3 * t_np:11.2f} {1e3 * t_nb:11.2f} {t_np / t_nb:8.2f}")


if __name__ == "__main__":
    main()
