"""Compiled vs numpy orbit-average kernels on one raster-sized batch.

    python3 benchmarks/bench_kernels.py [--cells 16384] [--n 2000] [--repeat 3]
"""

import argparse
import time

import numpy as np

from kanskew import _pykernels, kernels
from kanskew.basins import BASE_BITS


def batch(cells, seed=0):
    rng = np.random.default_rng(seed)
    n1 = rng.integers(0, 1 << BASE_BITS, cells, dtype=np.uint64)
    n2 = np.zeros(cells, dtype=np.uint64)
    return n1, n2, rng.random(cells)


def timed(fn, args, n, repeat):
    n1, n2, t0 = args
    out = np.empty(t0.size)
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn(n1, n2, t0, n, n // 2, 3, 0, 0, 1, 1, 0, 1 / 32, BASE_BITS, out, 0, t0.size)
        best = min(best, time.perf_counter() - start)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cells", type=int, default=16384)
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    data = batch(args.cells)
    t_py, out_py = timed(_pykernels.skew_averages, data, args.n, args.repeat)
    print(f"numpy   : {t_py:8.3f} s  ({args.cells * args.n / t_py / 1e6:7.1f} M steps/s)")
    if kernels.BACKEND != "cython":
        print("cython  : extension not built (numpy fallback active)")
        return
    t_cy, out_cy = timed(kernels.skew_averages, data, args.n, args.repeat)
    print(f"cython  : {t_cy:8.3f} s  ({args.cells * args.n / t_cy / 1e6:7.1f} M steps/s)")
    print(f"speedup : {t_py / t_cy:8.2f}x   max |difference| = {np.max(np.abs(out_py - out_cy)):.2e}")


if __name__ == "__main__":
    main()
