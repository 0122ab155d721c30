"""Compare the compiled kernels with the pure-Python fallback.

Run with ``python benchmarks/bench_kernels.py``. Prints best-of-N wall time
per call and the speedup for each kernel and problem size.
"""

import argparse
import timeit

import numpy as np

from flatdse._ext import _fallback

try:
    from flatdse._ext import _kernels
except ImportError:
    _kernels = None


def attention_case(n, dk, seed=0):
    rng = np.random.default_rng(seed)
    return tuple(np.ascontiguousarray(rng.standard_normal((n, dk))) for _ in range(3))


def pareto_case(n, seed=0):
    rng = np.random.default_rng(seed)
    return (np.ascontiguousarray(rng.standard_normal((n, 3))),)


CASES = [
    ("scalar_attention", "n=32 dk=8", attention_case(32, 8)),
    ("scalar_attention", "n=128 dk=16", attention_case(128, 16)),
    ("pareto_mask", "n=1000", pareto_case(1000)),
    ("pareto_mask", "n=4096", pareto_case(4096)),
]


def best_time(fn, args, repeat):
    timer = timeit.Timer(lambda: fn(*args))
    number, _ = timer.autorange()
    return min(timer.repeat(repeat=repeat, number=number)) / number


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled kernels not built; only the fallback can be timed")
    print(f"{'kernel':<18} {'size':<14} {'python (s)':>12} {'cython (s)':>12} {'speedup':>9}")
    for name, size, inputs in CASES:
        py = best_time(getattr(_fallback, name), inputs, args.repeat)
        if _kernels is None:
            print(f"{name:<18} {size:<14} {py:>12.3e} {'-':>12} {'-':>9}")
            continue
        cy = best_time(getattr(_kernels, name), inputs, args.repeat)
        # both backends must agree before their timings mean anything
        assert np.allclose(np.asarray(getattr(_kernels, name)(*inputs)), getattr(_fallback, name)(*inputs))
        print(f"{name:<18} {size:<14} {py:>12.3e} {cy:>12.3e} {py / cy:>8.1f}x")


if __name__ == "__main__":
    main()
