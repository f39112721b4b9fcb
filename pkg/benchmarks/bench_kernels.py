"""Time the compiled and pure-Python kernel backends on representative workloads.

Usage: python benchmarks/bench_kernels.py [--repeat 3]
"""

import argparse
import time

import numpy as np

from knndens import _backend
from knndens.distributions import Distribution, sample
from knndens.estimators import KernelId
from knndens.evaluation import make_grid
from knndens.geometry import Box, clipped_ball_volumes
from knndens import geometry
from knndens.spatial import SpatialIndex


def _workloads():
    g1 = make_grid(Box((-5.0,), (5.0,)), 0.01).points
    s1 = sample(Distribution("gaussian"), 32000, 0).points
    s2 = sample(Distribution("uniform", 2), 32000, 0).points
    g2 = make_grid(Box((0.0, 0.0), (1.0, 1.0)), 0.05).points
    rng = np.random.default_rng(0)
    qx = rng.uniform(-0.1, 1.1, (400, 2))
    qr = rng.uniform(0.05, 0.6, 400)

    def knn_1d(name):
        SpatialIndex(s1, backend=name).kth_distances(g1, 1008)

    def count_1d(name):
        SpatialIndex(s1, backend=name).range_counts(g1, 0.1)

    def kde_1d(name):
        SpatialIndex(s1, backend=name).kernel_sums(g1, 0.2, KernelId.EPANECHNIKOV.code)

    def knn_2d(name):
        SpatialIndex(s2, backend=name).kth_distances(g2, 179)

    def count_2d(name):
        SpatialIndex(s2, backend=name).range_counts(g2, 0.05)

    def clip_2d(name):
        geometry.kernels = _backend.get(name)
        try:
            clipped_ball_volumes(Box((0.0, 0.0), (1.0, 1.0)), qx, qr)
        finally:
            geometry.kernels = _backend.kernels

    return [
        ("kth distance, d=1, n=32000, 1001 queries, k=1008", knn_1d),
        ("radius count, d=1, n=32000, 1001 queries", count_1d),
        ("epanechnikov sum, d=1, n=32000, 1001 queries", kde_1d),
        ("kth distance, d=2, n=32000, 441 queries, k=179", knn_2d),
        ("radius count, d=2, n=32000, 441 queries", count_2d),
        ("clipped volume (QMC), d=2, 400 balls", clip_2d),
    ]


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)
    names = _backend.available()
    print(f"backends: {', '.join(names)} (default {_backend.BACKEND})")
    header = f"{'workload':52s}" + "".join(f"{n:>12s}" for n in names) + ("     speedup" if len(names) > 1 else "")
    print(header)
    for label, fn in _workloads():
        times = []
        for name in names:
            best = min(_time(fn, name) for _ in range(args.repeat))
            times.append(best)
        line = f"{label:52s}" + "".join(f"{t * 1e3:10.1f}ms" for t in times)
        if len(times) > 1:
            line += f"  {times[-1] / times[0]:9.1f}x"
        print(line)


def _time(fn, name):
    t = time.perf_counter()
    fn(name)
    return time.perf_counter() - t


if __name__ == "__main__":
    main()
