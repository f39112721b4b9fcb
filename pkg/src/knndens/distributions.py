"""Benchmark distributions: product laws of i.i.d. one-dimensional marginals.

Each marginal is defined by its density, its inverse CDF (used for
sampling) and its two-sided tail probability ``P(|X - median| > s)``
(used to size the effective evaluation region).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import ndtr, ndtri

from .geometry import Box, SupportRegion, Unbounded

DISTRIBUTION_IDS = ("uniform", "gaussian", "trunc-gaussian", "cauchy", "heavytail-beta13")

_SQRT_2PI = math.sqrt(2.0 * math.pi)
_TG_LO = ndtr(-1.0)
_TG_MASS = ndtr(1.0) - ndtr(-1.0)


@dataclass(frozen=True)
class Marginal:
    pdf: Callable[[np.ndarray], np.ndarray]
    ppf: Callable[[np.ndarray], np.ndarray]
    # half-width s with P(|X| > s) = p, for symmetric unbounded laws
    tail_halfwidth: Optional[Callable[[float], float]]
    support: Optional[tuple[float, float]]
    # smallest half-width ever returned for the region (conventional evaluation window)
    region_floor: float = 0.0


def _uniform_pdf(x):
    return np.where((x >= 0.0) & (x <= 1.0), 1.0, 0.0)


def _gauss_pdf(x):
    return np.exp(-0.5 * x * x) / _SQRT_2PI


def _trunc_gauss_pdf(x):
    return np.where(np.abs(x) <= 1.0, _gauss_pdf(x) / _TG_MASS, 0.0)


def _cauchy_pdf(x):
    return 1.0 / (math.pi * (1.0 + x * x))


def _heavy_pdf(x):
    return 0.25 * (np.abs(x) + 1.0) ** -1.5


def _heavy_ppf(u):
    # F(x) = (1 - x)^(-1/2) / 2 for x < 0 and 1 - (1 + x)^(-1/2) / 2 for x >= 0
    u = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore"):
        neg = 1.0 - (2.0 * u) ** -2.0
        pos = (2.0 * (1.0 - u)) ** -2.0 - 1.0
    return np.where(u < 0.5, neg, pos)


MARGINALS = {
    "uniform": Marginal(_uniform_pdf, lambda u: u, None, (0.0, 1.0)),
    "gaussian": Marginal(
        _gauss_pdf, ndtri, lambda p: float(-ndtri(0.5 * p)), None, region_floor=5.0
    ),
    "trunc-gaussian": Marginal(
        _trunc_gauss_pdf, lambda u: ndtri(_TG_LO + u * _TG_MASS), None, (-1.0, 1.0)
    ),
    "cauchy": Marginal(
        _cauchy_pdf,
        lambda u: np.tan(math.pi * (u - 0.5)),
        lambda p: 1.0 / math.tan(0.5 * math.pi * p),
        None,
    ),
    "heavytail-beta13": Marginal(
        _heavy_pdf, _heavy_ppf, lambda p: p**-2.0 - 1.0, None
    ),
}

TAIL_BETA = {
    "uniform": None,
    "trunc-gaussian": None,
    "gaussian": 1.0,
    "cauchy": 0.5,
    "heavytail-beta13": 1.0 / 3.0,
}


@dataclass(frozen=True)
class Distribution:
    """A product law ``f(x) = prod_j g(x_j)`` of one benchmark marginal ``g``.

    ``tail_beta`` is the exponent in ``P(f(X) < t) <= C t^beta`` for the
    unbounded laws, and ``None`` for laws with bounded support.
    """

    id: str
    d: int = 1
    tail_beta: Optional[float] = field(init=False)
    default_region: Box = field(init=False)

    def __post_init__(self):
        if self.id not in MARGINALS:
            raise ValueError(
                f"unknown distribution {self.id!r}; expected one of {', '.join(DISTRIBUTION_IDS)}"
            )
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.d}")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "tail_beta", TAIL_BETA[self.id])
        object.__setattr__(self, "default_region", effective_region(self, 1e-4))

    @property
    def marginal(self) -> Marginal:
        return MARGINALS[self.id]

    @property
    def support(self) -> SupportRegion:
        sup = self.marginal.support
        if sup is None:
            return Unbounded()
        return Box((sup[0],) * self.d, (sup[1],) * self.d)

    @property
    def bounded(self) -> bool:
        return self.marginal.support is not None

    def pdf(self, x) -> np.ndarray:
        """Density at each row of ``x`` (shape ``(m, d)``, or ``(m,)`` when ``d == 1``)."""
        x = as_points(x, self.d)
        g = self.marginal.pdf
        out = g(x[:, 0])
        for j in range(1, self.d):
            out = out * g(x[:, j])
        return out

    def sample(self, n: int, seed: int) -> "SampleSet":
        return sample(self, n, seed)


@dataclass(frozen=True)
class SampleSet:
    points: np.ndarray
    seed: Optional[int] = None
    dist_id: Optional[str] = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ValueError("a sample set needs at least one point with at least one coordinate")
        if not np.all(np.isfinite(pts)):
            raise ValueError("sample coordinates must be finite")
        pts = np.ascontiguousarray(pts)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


def as_points(x, d: int) -> np.ndarray:
    """Coerce ``x`` to a float array of shape ``(m, d)``."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1, 1)
    elif x.ndim == 1:
        x = x.reshape(-1, 1) if d == 1 else x.reshape(1, -1)
    if x.ndim != 2 or x.shape[1] != d:
        raise ValueError(f"expected points of dimension {d}, got array of shape {np.shape(x)}")
    return x


def pdf_eval(dist: Distribution, x) -> float:
    """Exact density of ``dist`` at the single point ``x``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (dist.d,):
        raise ValueError(f"point has dimension {x.size}, distribution has {dist.d}")
    return float(dist.pdf(x.reshape(1, -1))[0])


def sample(dist: Distribution, n: int, seed: int) -> SampleSet:
    """Draw ``n`` i.i.d. points by inverse-CDF transform of PCG64 uniforms."""
    if int(n) != n or n < 1:
        raise ValueError(f"sample size must be a positive integer, got {n}")
    rng = np.random.default_rng(seed)
    # (k + 0.5) / 2^52 is exact in double precision and never 0 or 1
    u = (rng.integers(0, 1 << 52, size=(int(n), dist.d)) + 0.5) * 2.0**-52
    pts = dist.marginal.ppf(u)
    return SampleSet(pts, seed=seed, dist_id=dist.id)


def effective_region(dist: Distribution, mass_tol: float = 1e-4) -> Box:
    """Axis-aligned box holding probability mass at least ``1 - mass_tol``.

    Bounded laws return their support. Unbounded laws split the tolerance
    evenly across axes and round each half-width up to an integer.
    """
    if not 0.0 < mass_tol < 1.0:
        raise ValueError(f"mass_tol must lie in (0, 1), got {mass_tol}")
    m = dist.marginal
    if m.support is not None:
        return Box((m.support[0],) * dist.d, (m.support[1],) * dist.d)
    per_axis = -math.expm1(math.log1p(-mass_tol) / dist.d)
    half = max(float(math.ceil(m.tail_halfwidth(per_axis) - 1e-9)), m.region_floor)
    return Box((-half,) * dist.d, (half,) * dist.d)
