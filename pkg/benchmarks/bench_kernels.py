#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

The dense cosine products always run through numpy (BLAS); their rows
are included to show why they are not worth re-implementing in C. The
greedy MMR loop and the small-matrix power iteration are where the
extension pays.

Run from the repo root after building the extension:

    python3 benchmarks/bench_kernels.py
"""
from __future__ import annotations

import time

import numpy as np

from ragrank.kernels import _py

try:
    from ragrank.kernels import _fast
except ImportError:
    _fast = None


def timeit(fn, *args, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def bench_cosine(impl, n, d, rng):
    m = np.ascontiguousarray(rng.normal(size=(n, d)))
    norms = np.linalg.norm(m, axis=1)
    q = np.ascontiguousarray(rng.normal(size=d))
    return timeit(impl.cosine_scores, m, norms, q, float(np.linalg.norm(q)))


def bench_mmr(impl, n, rng):
    rel = np.ascontiguousarray(rng.normal(size=n))
    sim = rng.normal(size=(n, n))
    sim = np.ascontiguousarray((sim + sim.T) / 2)
    order = np.arange(n, dtype=np.int64)
    return timeit(impl.mmr_greedy, rel, sim, 0.5, n // 2, order)


def bench_pagerank(impl, k, rng):
    W = np.abs(rng.normal(size=(k, k)))
    np.fill_diagonal(W, 0.0)
    P = np.ascontiguousarray(W / W.sum(axis=1, keepdims=True))
    v = np.full(k, 1.0 / k)
    return timeit(impl.pagerank_power, P, v, 0.85, 1e-12, 1000)


def main():
    rng = np.random.default_rng(0)
    compiled_cases = [
        ("mmr_greedy n=20 (fetch pool)", lambda i: bench_mmr(i, 20, rng)),
        ("mmr_greedy n=400", lambda i: bench_mmr(i, 400, rng)),
        ("pagerank k=3 (default)", lambda i: bench_pagerank(i, 3, rng)),
        ("pagerank k=12", lambda i: bench_pagerank(i, 12, rng)),
        ("pagerank k=200", lambda i: bench_pagerank(i, 200, rng)),
    ]
    print(f"{'case':34} {'python (ms)':>12} {'compiled (ms)':>14} {'speedup':>8}")
    for name, bench in compiled_cases:
        py_t = bench(_py) * 1e3
        if _fast is None:
            print(f"{name:34} {py_t:12.3f} {'n/a':>14} {'n/a':>8}")
            continue
        c_t = bench(_fast) * 1e3
        print(f"{name:34} {py_t:12.3f} {c_t:14.3f} {py_t / c_t:7.2f}x")

    print("\nBLAS-backed scans (numpy path, no compiled twin):")
    for name, n, d in [("cosine_scores n=10000 d=384", 10_000, 384),
                       ("cosine_scores n=2000 d=64", 2_000, 64)]:
        print(f"{name:34} {bench_cosine(_py, n, d, rng) * 1e3:12.3f}")


if __name__ == "__main__":
    main()
