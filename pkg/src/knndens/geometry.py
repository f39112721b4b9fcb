"""Ball volumes and ball-support intersection volumes.

Supports are axis-aligned boxes, balls, or the whole space. Intersections
are exact for intervals, for balls (two spherical caps) and for boxes whose
faces are crossed along a single axis. Every other box case averages the
exact chord length along the last axis over a fixed Halton point set in
the clipped face box (deterministic quasi-Monte Carlo).
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import betainc, gammaln
from scipy.stats import qmc

from ._backend import kernels

#: Identifier of the fixed low-discrepancy point set used for box clipping.
QMC_SEQUENCE = "halton-unscrambled-chord-v2"
QMC_MIN_POINTS = 4096
QMC_MAX_POINTS = 1 << 17
QMC_RTOL = 5e-4


@dataclass(frozen=True)
class Box:
    """Axis-aligned box ``[lo, hi]``; also used for evaluation regions."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        if len(lo) != len(hi) or not lo:
            raise ValueError("box lo and hi must be nonempty and of equal length")
        if not all(a < b for a, b in zip(lo, hi)):
            raise ValueError(f"box requires lo < hi componentwise, got lo={lo}, hi={hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def d(self) -> int:
        return len(self.lo)

    @property
    def volume(self) -> float:
        return math.prod(b - a for a, b in zip(self.lo, self.hi))

    def contains(self, x) -> np.ndarray:
        x = np.atleast_2d(x)
        return np.all((x >= np.array(self.lo)) & (x <= np.array(self.hi)), axis=1)

    def translated(self, shift) -> "Box":
        shift = np.asarray(shift, dtype=float)
        return Box(tuple(np.array(self.lo) + shift), tuple(np.array(self.hi) + shift))


@dataclass(frozen=True)
class Ball:
    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        center = tuple(float(v) for v in np.atleast_1d(self.center))
        if not center:
            raise ValueError("ball center must be nonempty")
        if not self.radius > 0:
            raise ValueError(f"ball radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def d(self) -> int:
        return len(self.center)

    def contains(self, x) -> np.ndarray:
        x = np.atleast_2d(x)
        return np.sum((x - np.array(self.center)) ** 2, axis=1) <= self.radius**2

    def translated(self, shift) -> "Ball":
        return Ball(tuple(np.array(self.center) + np.asarray(shift, dtype=float)), self.radius)


@dataclass(frozen=True)
class Unbounded:
    def translated(self, shift) -> "Unbounded":
        return self


SupportRegion = Union[Box, Ball, Unbounded]


def unit_ball_volume(d: int) -> float:
    """Volume of the unit ball in ``R^d``."""
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    if d == 1:
        return 2.0
    if d == 2:
        return math.pi
    return math.exp(0.5 * d * math.log(math.pi) - gammaln(0.5 * d + 1.0))


def ball_volume(d: int, r) -> float:
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("radius must be nonnegative")
    out = unit_ball_volume(d) * r**d
    return float(out) if out.ndim == 0 else out


def cap_volume(d: int, r, t):
    """Volume of the part of ``B(0, r)`` beyond a hyperplane at signed distance ``t``.

    ``t >= r`` gives 0 and ``t <= -r`` gives the whole ball.
    """
    r = np.asarray(r, dtype=float)
    t = np.clip(np.asarray(t, dtype=float), -r, r)
    full = unit_ball_volume(d) * r**d
    with np.errstate(invalid="ignore", divide="ignore"):
        z = np.where(r > 0, 1.0 - (t / np.where(r > 0, r, 1.0)) ** 2, 0.0)
    small = 0.5 * full * betainc(0.5 * (d + 1), 0.5, np.clip(z, 0.0, 1.0))
    return np.where(t >= 0, small, full - small)


@functools.lru_cache(maxsize=None)
def face_points(m: int) -> np.ndarray:
    """The fixed QMC point set: the first ``QMC_MAX_POINTS`` unscrambled Halton points of ``[0, 1]^m``."""
    pts = np.ascontiguousarray(qmc.Halton(m, scramble=False).random(QMC_MAX_POINTS))
    pts.setflags(write=False)
    return pts


def _check_points(x, d):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, d) if d > 1 else x.reshape(-1, 1)
    if x.ndim != 2 or x.shape[1] != d:
        raise ValueError(f"points must have dimension {d}, got shape {np.shape(x)}")
    return x


def _box_volumes(box: Box, x: np.ndarray, r: np.ndarray) -> np.ndarray:
    d = box.d
    lo = np.array(box.lo)
    hi = np.array(box.hi)
    if d == 1:
        left = np.maximum(x[:, 0] - r, lo[0])
        right = np.minimum(x[:, 0] + r, hi[0])
        contained = (x[:, 0] - r >= lo[0]) & (x[:, 0] + r <= hi[0])
        return np.where(contained, 2.0 * r, np.maximum(right - left, 0.0))

    full = unit_ball_volume(d) * r**d
    out = full.copy()
    gap = np.maximum(lo - x, 0.0) + np.maximum(x - hi, 0.0)
    disjoint = np.sum(gap * gap, axis=1) >= r * r
    low_cut = x - r[:, None] < lo
    high_cut = x + r[:, None] > hi
    cut = low_cut | high_cut
    n_axes = cut.sum(axis=1)
    inside = np.all((x >= lo) & (x <= hi), axis=1)

    out[disjoint] = 0.0
    far = np.maximum(np.abs(x - lo), np.abs(x - hi))
    swallowed = np.sum(far * far, axis=1) <= r * r
    out[swallowed] = box.volume
    # faces crossed along one axis only (x inside): ball minus one or two disjoint caps
    single = ~disjoint & ~swallowed & inside & (n_axes == 1)
    if single.any():
        idx = np.nonzero(single)[0]
        axis = np.argmax(cut[idx], axis=1)
        xa = x[idx, axis]
        ra = r[idx]
        vol = full[idx].copy()
        t_lo = xa - lo[axis]
        t_hi = hi[axis] - xa
        vol -= np.where(low_cut[idx, axis], cap_volume(d, ra, t_lo), 0.0)
        vol -= np.where(high_cut[idx, axis], cap_volume(d, ra, t_hi), 0.0)
        out[idx] = vol

    multi = ~disjoint & ~swallowed & (n_axes > 0) & ~single
    if multi.any():
        # integrate the exact chord along the last axis over the clipped face box
        idx = np.nonzero(multi)[0]
        rr = r[idx, None]
        rel_lo = (lo - x[idx]) / rr
        rel_hi = (hi - x[idx]) / rr
        zlo = np.ascontiguousarray(np.maximum(rel_lo[:, :-1], -1.0))
        zhi = np.ascontiguousarray(np.minimum(rel_hi[:, :-1], 1.0))
        mean = kernels.chord_mean(
            face_points(d - 1), zlo, zhi,
            np.ascontiguousarray(rel_lo[:, -1]), np.ascontiguousarray(rel_hi[:, -1]),
            QMC_MIN_POINTS, QMC_RTOL,
        )
        face = np.prod(np.maximum(zhi - zlo, 0.0), axis=1)
        out[idx] = r[idx] ** d * face * mean
    return out


def _ball_volumes(ball: Ball, x: np.ndarray, r: np.ndarray) -> np.ndarray:
    d = ball.d
    big = ball.radius
    delta = np.sqrt(np.sum((x - np.array(ball.center)) ** 2, axis=1))
    out = np.empty_like(r)
    none = delta >= r + big
    query_inside = delta + r <= big
    support_inside = ~query_inside & (delta + big <= r)
    lens = ~(none | query_inside | support_inside)
    out[none] = 0.0
    out[query_inside] = unit_ball_volume(d) * r[query_inside] ** d
    out[support_inside] = unit_ball_volume(d) * big**d
    if lens.any():
        dl = delta[lens]
        rl = r[lens]
        # signed distances from each center to the radical hyperplane
        t1 = (dl * dl + rl * rl - big * big) / (2.0 * dl)
        t2 = dl - t1
        out[lens] = cap_volume(d, rl, t1) + cap_volume(d, big, t2)
    return out


def clipped_ball_volumes(support: SupportRegion, x, r) -> np.ndarray:
    """Vectorised ``V(B(x_i, r_i) ∩ S)`` over rows of ``x``."""
    if isinstance(support, Unbounded):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        d = x.shape[1]
    else:
        d = support.d
        x = _check_points(x, d)
    r = np.broadcast_to(np.asarray(r, dtype=float), (x.shape[0],)).copy()
    if np.any(~(r > 0)):
        raise ValueError("radius must be positive")
    if isinstance(support, Unbounded):
        return unit_ball_volume(d) * r**d
    if isinstance(support, Box):
        return _box_volumes(support, x, r)
    if isinstance(support, Ball):
        return _ball_volumes(support, x, r)
    raise TypeError(f"unsupported support region {support!r}")


def clipped_ball_volume(support: SupportRegion, x, r: float) -> float:
    """Volume of ``B(x, r) ∩ S`` for a single point ``x``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if not isinstance(support, Unbounded) and x.shape[0] != support.d:
        raise ValueError(f"point has dimension {x.shape[0]}, support has {support.d}")
    if not r > 0:
        raise ValueError(f"radius must be positive, got {r}")
    return float(clipped_ball_volumes(support, x.reshape(1, -1), r)[0])
