"""Benchmark the compiled kernels against the pure-numpy fallback.

Run from the repository root after installing the package:

    python benchmarks/bench_backends.py

Times the three selector kernels, the Jacobi eigensolver, and an end-to-end
greedy partition with each backend, and prints the speedup of the compiled
path. Both backends produce the same partitions; only the clock differs.
"""

from __future__ import annotations

import time

import numpy as np

from mmcoreset import kernels
from mmcoreset.aggregate import FeatureMatrix
from mmcoreset.selector import SelectorConfig, select_bins


def timed(fn, repeat: int = 3) -> float:
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_case(name: str, make_args, fn, repeat: int = 3):
    rows = {}
    for backend in kernels.available_backends():
        kernels.set_backend(backend)
        args = make_args()
        rows[backend] = timed(lambda: fn(*args), repeat)
    return name, rows


def main() -> None:
    rng = np.random.default_rng(0)
    feats_mid = np.ascontiguousarray(rng.normal(size=(2_000, 64)))
    feats_small = np.ascontiguousarray(rng.normal(size=(4_000, 32)))
    sym = np.ascontiguousarray(
        (lambda x: x.T @ x)(rng.normal(size=(200, 160)))
    )
    select_features = FeatureMatrix.from_values(rng.normal(size=(2_000, 64)), "bench")

    cases = [
        bench_case(
            "pool_totals (2000 x 64)",
            lambda: (feats_mid,),
            lambda f: kernels.pool_totals(f),
        ),
        bench_case(
            "sqdist_accumulate x100 (4000 x 32)",
            lambda: (feats_small, np.zeros(4_000)),
            lambda f, acc: [kernels.sqdist_accumulate(f, i, acc) for i in range(100)],
        ),
        bench_case(
            "best_gain x100 (200k rows)",
            lambda: (
                rng.normal(size=200_000),
                rng.normal(size=200_000),
                np.ones(200_000, dtype=np.uint8),
            ),
            lambda a, t, alive: [kernels.best_gain(a, t, alive) for _ in range(100)],
        ),
        bench_case(
            "jacobi_eigh (160 x 160)",
            lambda: (sym,),
            lambda s: kernels.jacobi_eigh(s),
            repeat=1,
        ),
        bench_case(
            "select_bins n=2000 d=64 N=20",
            lambda: (select_features, SelectorConfig(20, "accelerated")),
            lambda f, c: select_bins(f, c),
            repeat=1,
        ),
    ]

    has_compiled = "cython" in kernels.available_backends()
    print(f"backends available: {', '.join(kernels.available_backends())}")
    print(f"{'case':40s} {'cython':>10s} {'python':>10s} {'speedup':>8s}")
    for name, rows in cases:
        cy = rows.get("cython")
        py = rows.get("python")
        speedup = f"{py / cy:7.1f}x" if has_compiled and cy else "     n/a"
        cy_s = f"{cy:9.4f}s" if cy is not None else "      n/a"
        print(f"{name:40s} {cy_s} {py:9.4f}s {speedup}")


if __name__ == "__main__":
    main()
