"""Exact k-th neighbor distance and closed-ball count queries.

One-dimensional samples are kept sorted and answered by binary search;
higher dimensions use a median-split k-d tree with bounding boxes. All
distance comparisons are made on squared Euclidean distances accumulated
axis by axis, and the square root is taken once on the way out, so results
agree exactly with :func:`brute_kth_distance` and :func:`brute_range_count`.
Radius counts convert ``a`` to the squared threshold that reproduces the
predicate ``sqrt(d2) <= a`` exactly.
"""

from __future__ import annotations

import math

import numpy as np

from . import _backend
from .distributions import SampleSet, as_points

LEAF_SIZE = 16


class SpatialIndex:
    """Immutable search structure over the points of one sample set."""

    def __init__(self, points, leaf_size: int = LEAF_SIZE, backend=None):
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ValueError("cannot index an empty sample set")
        self.n, self.d = pts.shape
        self._k = _backend.kernels if backend is None else _backend.get(backend)
        if self.d == 1:
            self._sorted = np.ascontiguousarray(np.sort(pts[:, 0], kind="stable"))
            self._sorted.setflags(write=False)
        else:
            self._build_tree(pts, leaf_size)

    @property
    def backend(self) -> str:
        return self._k.BACKEND

    def _build_tree(self, pts, leaf_size):
        order = np.arange(self.n)
        start, end, left, right, lo, hi = [], [], [], [], [], []

        def build(s, e):
            node = len(start)
            idx = order[s:e]
            block = pts[idx]
            start.append(s)
            end.append(e)
            left.append(-1)
            right.append(-1)
            lo.append(block.min(axis=0))
            hi.append(block.max(axis=0))
            if e - s <= leaf_size:
                return node
            axis = int(np.argmax(hi[node] - lo[node]))
            if hi[node][axis] == lo[node][axis]:
                return node  # all points identical
            srt = np.argsort(block[:, axis], kind="stable")
            order[s:e] = idx[srt]
            mid = s + (e - s) // 2
            left[node] = build(s, mid)
            right[node] = build(mid, e)
            return node

        build(0, self.n)
        as_idx = lambda v: np.ascontiguousarray(v, dtype=np.intp)
        self._tree = (
            np.ascontiguousarray(pts[order]),
            as_idx(start),
            as_idx(end),
            as_idx(left),
            as_idx(right),
            np.ascontiguousarray(lo),
            np.ascontiguousarray(hi),
        )

    def _queries(self, x):
        q = as_points(x, self.d)
        if self.d == 1:
            return np.ascontiguousarray(q[:, 0])
        return np.ascontiguousarray(q)

    def kth_sq_distances(self, x, k: int) -> np.ndarray:
        """Squared k-th smallest distance (with multiplicity) from each query row."""
        if int(k) != k or not 1 <= k <= self.n:
            raise ValueError(f"k must satisfy 1 <= k <= n={self.n}, got {k}")
        q = self._queries(x)
        if self.d == 1:
            return self._k.kth_sq_sorted(self._sorted, q, int(k))
        return self._k.kth_sq_tree(*self._tree, q, int(k))

    def kth_distances(self, x, k: int) -> np.ndarray:
        return np.sqrt(self.kth_sq_distances(x, k))

    def range_counts(self, x, a: float) -> np.ndarray:
        """Number of samples in the closed ball ``B(x, a)`` for each query row."""
        if not a >= 0:
            raise ValueError(f"radius must be nonnegative, got {a}")
        q = self._queries(x)
        r2 = sq_threshold(a)
        if self.d == 1:
            return self._k.count_sq_sorted(self._sorted, q, r2)
        return self._k.count_sq_tree(*self._tree, q, r2)

    def kernel_sums(self, x, h: float, kernel: int) -> np.ndarray:
        """``sum_i w(|X_i - x|^2 / h^2)`` over samples within distance ``h``.

        ``w`` is 1 for the box kernel and ``1 - u^2`` for Epanechnikov;
        normalising constants are applied by the caller.
        """
        q = self._queries(x)
        h2 = float(h) * float(h)
        if self.d == 1:
            return self._k.kernel_sum_sorted(self._sorted, q, h2, int(kernel))
        return self._k.kernel_sum_tree(*self._tree, q, h2, int(kernel))

    def kth_distance(self, x, k: int) -> float:
        return float(self.kth_distances(self._single(x), k)[0])

    def range_count(self, x, a: float) -> int:
        return int(self.range_counts(self._single(x), a)[0])

    def _single(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.d,):
            raise ValueError(f"query has dimension {x.size}, index has {self.d}")
        return x.reshape(1, -1)


def sq_threshold(a: float) -> float:
    """Largest double ``t`` with ``sqrt(t) <= a``.

    ``d2 <= sq_threshold(a)`` is then the same predicate as ``sqrt(d2) <= a``,
    so a count at radius ``kth_distance(x, k)`` always includes all k neighbors.
    """
    a = float(a)
    t = a * a
    while t > 0.0 and math.sqrt(t) > a:
        t = math.nextafter(t, -math.inf)
    while math.sqrt(math.nextafter(t, math.inf)) <= a:
        t = math.nextafter(t, math.inf)
    return t


def build_index(samples: SampleSet | np.ndarray, backend=None) -> SpatialIndex:
    points = samples.points if isinstance(samples, SampleSet) else samples
    return SpatialIndex(points, backend=backend)


def kth_distance(index: SpatialIndex, x, k: int) -> float:
    return index.kth_distance(x, k)


def range_count(index: SpatialIndex, x, a: float) -> int:
    return index.range_count(x, a)


def _sq_distances(points, x):
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points.reshape(-1, 1)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    d2 = np.zeros(points.shape[0])
    for a in range(points.shape[1]):
        d2 += (points[:, a] - x[a]) ** 2
    return d2


def brute_kth_distance(points, x, k: int) -> float:
    """Oracle: sort all squared distances and take the k-th."""
    d2 = np.sort(_sq_distances(points, x))
    if not 1 <= k <= d2.size:
        raise ValueError("k out of range")
    return float(np.sqrt(d2[k - 1]))


def brute_range_count(points, x, a: float) -> int:
    """Oracle: linear scan of distances against ``a``."""
    return int(np.count_nonzero(np.sqrt(_sq_distances(points, x)) <= float(a)))
