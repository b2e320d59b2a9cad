"""Benchmark the two kernel backends on the hot paths.

Run:  python3 benchmarks/bench_kernels.py

Both backends share byte-table accumulation order, so outputs are
bit-identical; this script reports wall-clock speedups only.
"""

from __future__ import annotations

import time

import numpy as np

from cal._backend import HAS_COMPILED, get_backend
from cal.spaces import build_product


def _time(fn, repeats: int = 3) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_subset_scan(backend, n_points: int, radii: int):
    rng = np.random.default_rng(7)
    w = rng.random(n_points)
    w /= w.sum()
    balls = np.zeros((radii, n_points), dtype=np.uint32)
    for i in range(n_points):
        mask = 1 << i
        for r in range(radii):
            for j in range(n_points):
                if rng.random() < 0.25 * (r + 1):
                    mask |= 1 << j
            balls[r, i] = mask
    return _time(lambda: backend.subset_scan(balls, w))


def bench_product_bfs(backend, dims: list[int], repeats: int = 20):
    space = build_product(dims)
    digits = space.digit_matrix()
    n_pts = space.num_points()
    rng = np.random.default_rng(11)
    src = (rng.random(n_pts) < 0.001).astype(np.uint8)
    src[0] = 1
    dm = np.asarray(space.dims, dtype=np.int64)
    st = np.asarray(space.strides, dtype=np.int64)

    def run():
        for _ in range(repeats):
            backend.product_bfs(digits, dm, st, src, len(dims))

    return _time(run)


def main():
    pure = get_backend("pure")
    rows = []
    if HAS_COMPILED:
        compiled = get_backend("compiled")
    else:
        compiled = None
        print("compiled backend unavailable; timing the pure backend only\n")

    for n_points, radii in ((18, 4), (20, 4), (22, 3)):
        label = f"subset_scan  {n_points} points x {radii} radii"
        tp = bench_subset_scan(pure, n_points, radii)
        tc = bench_subset_scan(compiled, n_points, radii) if compiled else None
        rows.append((label, tp, tc))

    for dims in ([2] * 14, [2] * 17, [3] * 10):
        label = f"product_bfs  {len(dims)}x{dims[0]} ({np.prod(dims)} points, 20 reps)"
        tp = bench_product_bfs(pure, dims)
        tc = bench_product_bfs(compiled, dims) if compiled else None
        rows.append((label, tp, tc))

    width = max(len(r[0]) for r in rows)
    print(f"{'kernel':<{width}}  {'pure':>10}  {'compiled':>10}  {'speedup':>8}")
    for label, tp, tc in rows:
        if tc is None:
            print(f"{label:<{width}}  {tp:>9.4f}s  {'-':>10}  {'-':>8}")
        else:
            print(f"{label:<{width}}  {tp:>9.4f}s  {tc:>9.4f}s  {tp / tc:>7.1f}x")


if __name__ == "__main__":
    main()
