"""Time the numba kernels against the NumPy fallbacks.

    python3 benchmarks/bench_kernels.py [--n 4000] [--repeat 3] [--end-to-end]

Kernel timings call both implementations in one process (numba compile
time is excluded by a warm-up call).  ``--end-to-end`` also runs a small
workload in two subprocesses with RENORM_NUMBA=1 and RENORM_NUMBA=0.
"""
import argparse
import os
import subprocess
import sys
import time

import numpy as np

from breakrenorm import kernels as K
from breakrenorm._accel import USE_NUMBA


def best_of(fn, repeat):
    fn()
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def cases(n):
    rng = np.random.default_rng(0)
    c = 1.5
    A = np.ascontiguousarray(rng.uniform(0.05, c, n))
    V = np.ascontiguousarray(rng.uniform(0.0, c - 1.0, n))
    xs = np.linspace(-1.0, 0.0, 256)
    word = np.array(([0] * 3 + [1]) * 50, dtype=np.int64)
    return [
        ("orbit_batch", lambda: K._orbit_batch_loop(A, V, c, 10_000),
         lambda: K._orbit_batch_np(A, V, c, 10_000)),
        ("cf_batch depth 12", lambda: K._cf_batch_loop(A, V, c, 12, 10_000, 1e-12, 1e-14),
         lambda: K._cf_batch_np(A, V, c, 12, 10_000, 1e-12, 1e-14)),
        ("word_eval 200 x 256", lambda: K._word_eval_loop(word, xs, 1.0, 1.0, 0.5, 2.0, 0.3),
         lambda: K._word_eval_np(word, xs, 1.0, 1.0, 0.5, 2.0, 0.3)),
        ("lift_orbit 1e5", lambda: K._lift_orbit_loop(1.0, 0.5, 2.0, -0.5, 100_000),
         lambda: K._lift_orbit_py(1.0, 0.5, 2.0, -0.5, 100_000)),
    ]


_WORKLOAD = r"""
import time, numpy as np
t = time.perf_counter()
from breakrenorm.hyperbolicity import apriori_scan
from breakrenorm.cli import raster_regions
apriori_scan(1.5, 2000)
raster_regions(2.0, 80)
print(time.perf_counter() - t)
"""


def end_to_end():
    out = {}
    for flag in ("1", "0"):
        env = dict(os.environ, RENORM_NUMBA=flag)
        r = subprocess.run([sys.executable, "-c", _WORKLOAD], env=env, capture_output=True,
                           text=True, check=True)
        out[flag] = float(r.stdout.strip().splitlines()[-1])
    print(f"\nend-to-end (apriori 2000 + 80x80 raster): numba {out['1']:.2f}s, "
          f"numpy {out['0']:.2f}s, ratio {out['0'] / out['1']:.1f}x")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=4000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--end-to-end", action="store_true")
    args = ap.parse_args()
    if not USE_NUMBA:
        print("RENORM_NUMBA=0: the *_loop kernels run as plain Python here")
    print(f"{'kernel':<22}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}")
    for name, fast, slow in cases(args.n):
        tf, ts = best_of(fast, args.repeat), best_of(slow, args.repeat)
        print(f"{name:<22}{tf:>12.4f}{ts:>12.4f}{ts / tf:>9.1f}x")
    if args.end_to_end:
        end_to_end()


if __name__ == "__main__":
    main()
