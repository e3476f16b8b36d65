"""Compare the compiled and pure-Python backends on the hot loops.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time

import numpy as np

from sfhd._kernels import get_backend


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases():
    xs = np.linspace(0.01, 90.0, 400)
    thetas = (np.arange(256) + 0.5) * np.pi / 256
    rng = np.random.default_rng(1)
    a = np.tril(rng.standard_normal((101, 101)) + 1j * rng.standard_normal((101, 101)))
    a_pos = np.ascontiguousarray(a)
    a_neg = np.ascontiguousarray(np.conj(a))
    return [
        ("series_sum 80x80", lambda b: b.series_sum(0.8, 1.0, np.log(0.1), np.log(400.0 * 0.1**0.8), 80, 80)),
        ("sph_jn_table l<=100, 400 x", lambda b: b.sph_jn_table(100, xs)),
        ("ylm_table l<=100, 256 theta", lambda b: b.ylm_table(100, thetas)),
        ("ylm_synth l<=100, 256 theta", lambda b: b.ylm_synth(a_pos, a_neg, thetas, 1)),
    ]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    try:
        cy = get_backend("cython")
    except ImportError:
        print("compiled extension not built; only the Python backend is available")
        return
    py = get_backend("python")
    print(f"{'kernel':<30} {'cython [ms]':>12} {'python [ms]':>12} {'speedup':>8}")
    for name, fn in cases():
        t_cy = best_of(lambda: fn(cy), args.repeat)
        t_py = best_of(lambda: fn(py), args.repeat)
        print(f"{name:<30} {1e3 * t_cy:12.3f} {1e3 * t_py:12.3f} {t_py / t_cy:8.1f}")


if __name__ == "__main__":
    main()
