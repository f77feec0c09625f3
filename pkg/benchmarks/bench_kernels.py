"""Benchmark the jitted hot kernels against the pure-Python fallback.

Runs itself twice: once as-is (numba, unless unavailable) and once in a
subprocess with VDSA_NO_NUMBA=1, then prints a comparison table.

Usage: python benchmarks/bench_kernels.py [--inner-only]
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def bench(label_extra=""):
    from vdsasim import _kernels

    _kernels.warmup()
    rng = np.random.default_rng(0)
    n = 400
    xs = rng.uniform(0.0, 10000.0, n)
    ys = rng.uniform(-8.0, 8.0, n)
    pw = np.full(n, 200.0)
    f = np.full(n, 5.9e9)
    starts = rng.uniform(0.0, 1.0, n)
    ends = starts + 5e-4
    ids = np.arange(n, dtype=np.int64)
    off = np.array([0.0, 8e6, 16e6], dtype=np.float64)
    val = np.array([1.0, 10.0 ** -2.8, 10.0 ** -4.0], dtype=np.float64)

    results = {}

    reps = 20_000
    t0 = time.perf_counter()
    for _ in range(reps):
        _kernels.sense(
            n, xs, ys, pw, f, starts, ends, ids, 2.0, 13e-6,
            5000.0, 0.0, 9999, 5.9e9, -1, 10000.0,
            10.0, 47.86, 2.0, 4.0, 80.0, 3.0, 7, 3, off, val, 10.0 ** -8.5,
        )
    results["sense (n=400)"] = (time.perf_counter() - t0) / reps

    reps = 2_000_000
    t0 = time.perf_counter()
    for i in range(reps):
        _kernels.path_gain(float(i % 5000), 4.0, 10000.0, 10.0, 47.86, 2.0, 4.0, 80.0)
    results["path_gain"] = (time.perf_counter() - t0) / reps

    reps = 1_000_000
    t0 = time.perf_counter()
    for i in range(reps):
        _kernels.shadow_db(7, i % 64, (i + 1) % 64, i % 140, 3.0)
    results["shadow_db"] = (time.perf_counter() - t0) / reps

    mode = "numba" if _kernels.USE_NUMBA else "fallback"
    return mode, results


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--inner-only", action="store_true",
                        help=argparse.SUPPRESS)
    args = parser.parse_args()

    mode, results = bench()
    if args.inner_only:
        print(json.dumps({"mode": mode, "results": results}))
        return

    env = dict(os.environ, VDSA_NO_NUMBA="1")
    out = subprocess.run(
        [sys.executable, os.path.abspath(__file__), "--inner-only"],
        env=env, capture_output=True, text=True, check=True,
    )
    other = json.loads(out.stdout.strip().splitlines()[-1])

    print(f"{'kernel':<16} {mode:>12} {other['mode']:>12} {'speedup':>9}")
    for name, t in results.items():
        t2 = other["results"][name]
        print(f"{name:<16} {t * 1e6:>10.2f}us {t2 * 1e6:>10.2f}us {t2 / t:>8.1f}x")


if __name__ == "__main__":
    main()
