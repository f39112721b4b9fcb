"""kNN density estimators and a compact-kernel KDE baseline.

Plain kNN: ``(k - 1) / (n V(B(x, rho)))``, where ``rho`` is the distance
from ``x`` to its k-th nearest sample. The boundary-corrected variant
divides by the volume of the ball clipped to the known support instead.
The truncated variant switches to a fixed-radius count
``n(x, a) / (n V(B(x, a)))`` once ``rho`` exceeds ``a``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Union

import numpy as np

from . import _backend
from .distributions import SampleSet, as_points
from .geometry import Ball, Box, SupportRegion, Unbounded, clipped_ball_volumes, unit_ball_volume
from .spatial import SpatialIndex, build_index


class DegenerateEstimateError(ValueError):
    """The k-th neighbor distance is zero: k or more samples coincide with the query."""

    def __init__(self, point, k):
        self.point = np.asarray(point, dtype=float)
        self.k = k
        super().__init__(f"k-th neighbor distance is zero at x={self.point.tolist()} (k={k})")


class KernelId(enum.Enum):
    BOX = "box"
    EPANECHNIKOV = "epanechnikov"

    @property
    def code(self) -> int:
        if self is KernelId.BOX:
            return _backend.kernels.KERNEL_BOX
        return _backend.kernels.KERNEL_EPANECHNIKOV

    def normaliser(self, d: int) -> float:
        """Constant c with ``K(u) = c * w(|u|^2)`` integrating to one on the unit ball."""
        if self is KernelId.BOX:
            return 1.0 / unit_ball_volume(d)
        return (d + 2) / (2.0 * unit_ball_volume(d))

    def __call__(self, u) -> np.ndarray:
        u = np.atleast_2d(np.asarray(u, dtype=float))
        d = u.shape[1]
        r2 = np.sum(u * u, axis=1)
        w = np.ones_like(r2) if self is KernelId.BOX else 1.0 - r2
        return np.where(r2 <= 1.0, self.normaliser(d) * w, 0.0)


def _check_k(k):
    if int(k) != k or k < 2:
        raise ValueError(f"k must be an integer >= 2, got {k}")


@dataclass(frozen=True)
class KnnPlain:
    k: int

    def __post_init__(self):
        _check_k(self.k)

    name = "knn"


@dataclass(frozen=True)
class KnnBoundary:
    k: int
    support: SupportRegion

    def __post_init__(self):
        _check_k(self.k)
        if not isinstance(self.support, (Box, Ball, Unbounded)):
            raise TypeError("support must be a Box, Ball or Unbounded region")

    name = "knn-bc"


@dataclass(frozen=True)
class KnnTruncated:
    k: int
    a: float

    def __post_init__(self):
        _check_k(self.k)
        if not self.a > 0:
            raise ValueError(f"truncation radius must be positive, got {self.a}")

    name = "knn-trunc"


@dataclass(frozen=True)
class Kde:
    h: float
    kernel: KernelId = KernelId.EPANECHNIKOV

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError(f"bandwidth must be positive, got {self.h}")
        object.__setattr__(self, "kernel", KernelId(self.kernel))

    name = "kde"


EstimatorSpec = Union[KnnPlain, KnnBoundary, KnnTruncated, Kde]


def _rho(index, x, k, n):
    if not 2 <= k <= index.n:
        raise ValueError(f"k must satisfy 2 <= k <= n={index.n}, got {k}")
    if n != index.n:
        raise ValueError(f"n={n} does not match the index size {index.n}")
    return index.kth_distances(x, k)


def _raise_degenerate(x, rho, k):
    zero = np.nonzero(rho == 0.0)[0]
    if zero.size:
        raise DegenerateEstimateError(x[zero[0]], k)


def knn_estimates(index: SpatialIndex, n: int, k: int, x) -> np.ndarray:
    x = as_points(x, index.d)
    rho = _rho(index, x, k, n)
    _raise_degenerate(x, rho, k)
    return (k - 1) / (n * (unit_ball_volume(index.d) * rho**index.d))


def bc_knn_estimates(index: SpatialIndex, n: int, k: int, support: SupportRegion, x) -> np.ndarray:
    x = as_points(x, index.d)
    rho = _rho(index, x, k, n)
    _raise_degenerate(x, rho, k)
    vol = clipped_ball_volumes(support, x, rho)
    if np.any(vol <= 0.0):
        bad = x[np.nonzero(vol <= 0.0)[0][0]]
        raise RuntimeError(f"clipped ball volume is zero at x={bad.tolist()}; is x outside the support?")
    return (k - 1) / (n * vol)


def trunc_knn_estimates(index: SpatialIndex, n: int, k: int, a: float, x) -> np.ndarray:
    if not a > 0:
        raise ValueError(f"truncation radius must be positive, got {a}")
    x = as_points(x, index.d)
    rho = _rho(index, x, k, n)
    vd = unit_ball_volume(index.d)
    near = rho <= a
    out = np.empty(x.shape[0])
    if near.any():
        r = rho[near]
        _raise_degenerate(x[near], r, k)
        out[near] = (k - 1) / (n * (vd * r**index.d))
    if (~near).any():
        out[~near] = index.range_counts(x[~near], a) / (n * (vd * a**index.d))
    return out


def kde_estimates(index: SpatialIndex, n: int, h: float, kernel: KernelId, x) -> np.ndarray:
    if not h > 0:
        raise ValueError(f"bandwidth must be positive, got {h}")
    kernel = KernelId(kernel)
    x = as_points(x, index.d)
    sums = index.kernel_sums(x, h, kernel.code)
    return kernel.normaliser(index.d) * sums / (n * h**index.d)


def estimate(spec: EstimatorSpec, index: SpatialIndex, x) -> np.ndarray:
    """Evaluate ``spec`` at every row of ``x`` using one shared index."""
    n = index.n
    if isinstance(spec, KnnPlain):
        return knn_estimates(index, n, spec.k, x)
    if isinstance(spec, KnnBoundary):
        return bc_knn_estimates(index, n, spec.k, spec.support, x)
    if isinstance(spec, KnnTruncated):
        return trunc_knn_estimates(index, n, spec.k, spec.a, x)
    if isinstance(spec, Kde):
        return kde_estimates(index, n, spec.h, spec.kernel, x)
    raise TypeError(f"unknown estimator spec {spec!r}")


# single-point forms

def _one(x, d):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (d,):
        raise ValueError(f"point has dimension {x.size}, index has {d}")
    return x.reshape(1, -1)


def knn_estimate(index: SpatialIndex, n: int, k: int, x) -> float:
    return float(knn_estimates(index, n, k, _one(x, index.d))[0])


def bc_knn_estimate(index: SpatialIndex, n: int, k: int, support: SupportRegion, x) -> float:
    return float(bc_knn_estimates(index, n, k, support, _one(x, index.d))[0])


def trunc_knn_estimate(index: SpatialIndex, n: int, k: int, a: float, x) -> float:
    return float(trunc_knn_estimates(index, n, k, a, _one(x, index.d))[0])


def kde_estimate(samples: SampleSet, h: float, kernel: KernelId, x) -> float:
    index = build_index(samples)
    return float(kde_estimates(index, index.n, h, kernel, _one(x, index.d))[0])
