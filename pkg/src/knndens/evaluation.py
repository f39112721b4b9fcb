"""Grid-based l1 / l-infinity error measurement and trial averaging.

For one trial: draw samples, evaluate the estimator on a lattice covering
the evaluation region, and report ``mean|f_hat - f| * volume`` (l1) and
``max|f_hat - f|`` (l-infinity). Trial ``t`` always uses seed
``base_seed + t``, so a report does not depend on how trials are scheduled.
"""

from __future__ import annotations

import functools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .distributions import Distribution, SampleSet, sample
from .estimators import EstimatorSpec, Kde, KnnBoundary, KnnPlain, KnnTruncated, estimate
from .geometry import Box
from .spatial import build_index

_SPECS = (KnnPlain, KnnBoundary, KnnTruncated, Kde)

CSV_COLUMNS = ("dist", "d", "estimator", "n", "k", "h", "a", "trials", "l1", "linf", "seed")


class TrialError(RuntimeError):
    def __init__(self, trial: int, cause: Exception):
        self.trial = trial
        self.cause = cause
        super().__init__(f"trial {trial} failed: {cause}")


@dataclass(frozen=True)
class EvaluationGrid:
    """Cartesian lattice over ``region``; ``axes[j]`` holds the coordinates along axis j."""

    region: Box
    axes: tuple[np.ndarray, ...]

    @property
    def d(self) -> int:
        return self.region.d

    @property
    def size(self) -> int:
        return math.prod(len(a) for a in self.axes)

    @property
    def volume(self) -> float:
        return self.region.volume

    @functools.cached_property
    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        pts = np.ascontiguousarray(np.stack([m.ravel() for m in mesh], axis=1))
        pts.setflags(write=False)
        return pts


def _box(region) -> Box:
    if isinstance(region, Box):
        return region
    lo, hi = region
    return Box(lo, hi)


def make_grid(region, step: float) -> EvaluationGrid:
    """Lattice ``lo, lo + step, ...`` (up to ``hi``) along every axis, row-major."""
    region = _box(region)
    if not step > 0:
        raise ValueError(f"grid step must be positive, got {step}")
    axes = []
    for lo, hi in zip(region.lo, region.hi):
        span = hi - lo
        if step > span:
            raise ValueError(f"grid step {step} exceeds the region side length {span}")
        m = int(math.floor(span / step + 1e-9))
        axes.append(np.minimum(lo + step * np.arange(m + 1), hi))
    return EvaluationGrid(region, tuple(axes))


def make_grid_count(region, count: int) -> EvaluationGrid:
    """Lattice with about ``count`` points in total, endpoints included."""
    region = _box(region)
    if count < 2**region.d:
        raise ValueError(f"a grid over {region.d} axes needs at least {2**region.d} points")
    m = max(2, int(round(count ** (1.0 / region.d))))
    axes = tuple(np.linspace(lo, hi, m) for lo, hi in zip(region.lo, region.hi))
    return EvaluationGrid(region, axes)


def _spec_params(spec):
    k = getattr(spec, "k", None)
    h = getattr(spec, "h", None)
    a = getattr(spec, "a", None)
    return k, h, a


def spec_name(spec) -> str:
    return getattr(spec, "name", "custom")


@dataclass
class ErrorReport:
    dist: str
    d: int
    estimator: EstimatorSpec
    n: int
    trials: int
    seed: int
    per_trial: list[tuple[float, float]] = field(default_factory=list)

    @property
    def l1(self) -> float:
        return math.fsum(p[0] for p in self.per_trial) / len(self.per_trial)

    @property
    def linf(self) -> float:
        return math.fsum(p[1] for p in self.per_trial) / len(self.per_trial)

    def csv_row(self) -> dict:
        k, h, a = _spec_params(self.estimator)
        return {
            "dist": self.dist,
            "d": self.d,
            "estimator": spec_name(self.estimator),
            "n": self.n,
            "k": "" if k is None else k,
            "h": "" if h is None else repr(float(h)),
            "a": "" if a is None else repr(float(a)),
            "trials": self.trials,
            "l1": repr(self.l1),
            "linf": repr(self.linf),
            "seed": self.seed,
        }


Estimator = Union[EstimatorSpec, Callable[[np.ndarray], np.ndarray]]


def errors_on_grid(values: np.ndarray, truth: np.ndarray, volume: float) -> tuple[float, float]:
    dev = np.abs(np.asarray(values, dtype=float) - truth)
    return math.fsum(dev) / dev.size * volume, float(dev.max())


def eval_errors(spec: Estimator, samples: SampleSet, dist: Distribution, grid: EvaluationGrid) -> tuple[float, float]:
    """(l1, linf) of one estimate against ``dist.pdf`` on ``grid``.

    ``spec`` may also be any callable mapping grid points to density
    values, which is how stubs are plugged in.
    """
    if not (grid.d == dist.d == samples.d):
        raise ValueError(f"dimension mismatch: grid {grid.d}, distribution {dist.d}, samples {samples.d}")
    pts = grid.points
    if isinstance(spec, _SPECS):
        values = estimate(spec, build_index(samples), pts)
    else:
        values = spec(pts)
    return errors_on_grid(values, dist.pdf(pts), grid.volume)


def _one_trial(spec, dist, n, grid, seed):
    return eval_errors(spec, sample(dist, n, seed), dist, grid)


def run_trials(
    spec: Estimator,
    dist: Distribution,
    n: int,
    grid: EvaluationGrid,
    trials: int,
    base_seed: int = 0,
    workers: Optional[int] = None,
) -> ErrorReport:
    """Average :func:`eval_errors` over ``trials`` independent sample sets."""
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    seeds = [base_seed + t for t in range(trials)]

    def job(t):
        try:
            return _one_trial(spec, dist, n, grid, seeds[t])
        except Exception as exc:  # surfaced with the trial index
            raise TrialError(t, exc) from exc

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_trial = list(pool.map(job, range(trials)))
    else:
        per_trial = [job(t) for t in range(trials)]
    return ErrorReport(dist.id, dist.d, spec, n, trials, base_seed, per_trial)


def write_csv(rows: Sequence[dict], path) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
