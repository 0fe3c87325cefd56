"""Timing comparison of the numba kernels against the numpy fallbacks.

Run:  python benchmarks/bench_kernels.py [--big]

The same inputs go through both implementations of each hot kernel
(exact NN scan, bounded kd-tree query, farthest point sampling); numba
timings exclude the first-call compilation by warming up beforehand.
"""

import argparse
import time

import numpy as np

from specmap import _kernels


def _time(fn, *args, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--big", action="store_true", help="larger problem sizes")
    args = ap.parse_args()

    m = 20_000 if args.big else 4_000
    q = 8_000 if args.big else 2_000
    dim = 60
    n_fps = 200_000 if args.big else 30_000

    rng = np.random.default_rng(0)
    points = rng.normal(size=(m, dim))
    queries = rng.normal(size=(q, dim))
    cloud = rng.normal(size=(n_fps, 3))
    tree = _kernels.kdtree_build(points)

    rows = []

    t_np = _time(_kernels._nn_scan_numpy, points, queries)
    rows.append(("exact NN scan", f"{m}x{q} pts, dim {dim}", t_np, None))

    t_kd_np = _time(_kernels._kd_query_batch_numpy, tree, queries, 32)
    rows.append(("kd-tree query (width 32)", f"{m}x{q} pts, dim {dim}", t_kd_np, None))

    t_fps_np = _time(_kernels._fps_numpy, cloud, 500, 0)
    rows.append(("FPS (500 samples)", f"{n_fps} pts", t_fps_np, None))

    if _kernels.USING_NUMBA:
        _kernels._nn_scan_numba(points[:50], queries[:10])  # compile
        rows[0] = rows[0][:3] + (_time(_kernels._nn_scan_numba, points, queries),)

        _kernels._kd_query_batch_numba(*tree, queries[:10], 32)
        rows[1] = rows[1][:3] + (
            _time(_kernels._kd_query_batch_numba, *tree, queries, 32),
        )

        _kernels._fps_numba(cloud[:100], 5, 0)
        rows[2] = rows[2][:3] + (_time(_kernels._fps_numba, cloud, 500, 0),)
    else:
        print("numba unavailable or disabled; numpy fallback only\n")

    header = f"{'kernel':<28} {'size':<24} {'numpy':>10} {'numba':>10} {'speedup':>9}"
    print(header)
    print("-" * len(header))
    for name, size, t_np, t_nb in rows:
        if t_nb is None:
            print(f"{name:<28} {size:<24} {t_np:>9.3f}s {'-':>10} {'-':>9}")
        else:
            print(
                f"{name:<28} {size:<24} {t_np:>9.3f}s {t_nb:>9.3f}s "
                f"{t_np / t_nb:>8.1f}x"
            )


if __name__ == "__main__":
    main()
