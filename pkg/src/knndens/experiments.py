"""Parameter rules, log-log slope fits, convergence runs and kNN-vs-KDE ratios."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .distributions import Distribution, sample
from .estimators import (
    KernelId,
    Kde,
    KnnBoundary,
    KnnPlain,
    KnnTruncated,
    kde_estimates,
    trunc_knn_estimates,
)
from .evaluation import (
    CSV_COLUMNS,
    ErrorReport,
    EvaluationGrid,
    errors_on_grid,
    run_trials,
)
from .geometry import SupportRegion, Unbounded
from .spatial import build_index

# seed offset between successive sample sizes; trial t of size index i uses base + i * SEED_STRIDE + t
SEED_STRIDE = 1_000_000


def _round(v: float) -> int:
    return int(math.floor(v + 0.5))


def _clamp_k(k: int, n: int) -> int:
    return min(max(2, k), n - 1)


def select_k_bounded(n: int, d: int, c: float = 1.0) -> int:
    """``k ~ c n^(2/(d+2))`` for laws with bounded support."""
    if n < 4 or c <= 0:
        raise ValueError("need n >= 4 and c > 0")
    return _clamp_k(_round(c * n ** (2.0 / (d + 2))), n)


def select_k_linf_unbounded(n: int, d: int, c: float = 1.0) -> int:
    """``k ~ c n^(4/(d+4))``, the sup-norm choice for smooth unbounded laws."""
    if n < 4 or c <= 0:
        raise ValueError("need n >= 4 and c > 0")
    return _clamp_k(_round(c * n ** (4.0 / (d + 4))), n)


def select_k_power(n: int, exponent: float, c: float = 1.0) -> int:
    if n < 4 or c <= 0:
        raise ValueError("need n >= 4 and c > 0")
    return _clamp_k(_round(c * n**exponent), n)


def tail_exponents(d: int, beta: float) -> tuple[float, float]:
    """(k exponent, a exponent) of the truncated-estimator rule; ``a ~ n^-(a exponent)``."""
    if not 0.0 < beta <= 1.0:
        raise ValueError(f"tail exponent beta must lie in (0, 1], got {beta}")
    bp = min(beta, 0.5)
    denom = d * bp * bp + 1.0
    return 2.0 * bp / denom, bp * bp / denom


def select_params_tail(n: int, d: int, beta: float, c_k: float = 1.0, c_a: float = 1.0) -> tuple[int, float]:
    """``(k, a)`` for the truncated estimator under tail exponent ``beta``."""
    ke, ae = tail_exponents(d, beta)
    if n < 4 or c_k <= 0 or c_a <= 0:
        raise ValueError("need n >= 4 and positive multipliers")
    return _clamp_k(_round(c_k * n**ke), n), c_a * n**-ae


def fit_slope(series: Sequence[tuple[float, float]]) -> float:
    """Negated least-squares slope of ``ln err`` against ``ln n``."""
    if len(series) < 3:
        raise ValueError("need at least three (n, err) points")
    n = np.array([p[0] for p in series], dtype=float)
    e = np.array([p[1] for p in series], dtype=float)
    if np.any(n <= 0) or np.any(e <= 0):
        raise ValueError("n and err must be positive")
    x = np.log(n)
    y = np.log(e)
    xc = x - x.mean()
    return float(-np.dot(xc, y - y.mean()) / np.dot(xc, xc))


def theory_exponents(dist: Distribution, estimator: str) -> tuple[float, float]:
    """Rate exponents (l1, linf) from the upper bounds, ignoring log factors.

    A plain kNN estimate on a bounded support has no sup-norm rate (0).
    """
    d = dist.d
    if dist.bounded:
        rate = 1.0 / (d + 2)
        return rate, rate if estimator == "knn-bc" else 0.0
    beta = dist.tail_beta
    l1 = min(beta / (d * beta * beta + 1.0), 2.0 / (d + 4))
    linf = 1.0 / 3.0 if d <= 2 else 2.0 / (d + 4)
    return l1, linf


@dataclass(frozen=True)
class KRule:
    """How k (and a) scale with n.

    kind: ``bounded`` (n^(2/(d+2))), ``linf-unbounded`` (n^(4/(d+4))),
    ``power`` (n^exponent) or ``tail`` (the truncated-estimator pair).
    """

    kind: str = "bounded"
    c: float = 1.0
    c_a: float = 1.0
    exponent: float = 2.0 / 3.0

    KINDS = ("bounded", "linf-unbounded", "power", "tail")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown k rule {self.kind!r}; expected one of {', '.join(self.KINDS)}")

    def params(self, n: int, dist: Distribution) -> tuple[int, Optional[float]]:
        if self.kind == "bounded":
            return select_k_bounded(n, dist.d, self.c), None
        if self.kind == "linf-unbounded":
            return select_k_linf_unbounded(n, dist.d, self.c), None
        if self.kind == "power":
            return select_k_power(n, self.exponent, self.c), None
        if dist.tail_beta is None:
            raise ValueError(f"the tail rule needs a heavy-tailed law; {dist.id} has bounded support")
        return select_params_tail(n, dist.d, dist.tail_beta, self.c, self.c_a)

    def describe(self) -> str:
        if self.kind == "power":
            return f"power(c={self.c!r}, exponent={self.exponent!r})"
        if self.kind == "tail":
            return f"tail(c_k={self.c!r}, c_a={self.c_a!r})"
        return f"{self.kind}(c={self.c!r})"


def make_spec(estimator: str, k: int, a: Optional[float] = None, support: Optional[SupportRegion] = None):
    if estimator == "knn":
        return KnnPlain(k)
    if estimator == "knn-bc":
        if support is None:
            raise ValueError("knn-bc needs a support region")
        return KnnBoundary(k, support)
    if estimator == "knn-trunc":
        if a is None:
            raise ValueError("knn-trunc needs a truncation radius")
        return KnnTruncated(k, a)
    raise ValueError(f"unknown kNN estimator {estimator!r}")


def _rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


@dataclass
class ConvergenceReport:
    """Trial-averaged errors over increasing n with fitted and theoretical exponents."""

    rows: list[dict]
    theory_l1: float
    theory_linf: float
    settings: dict = field(default_factory=dict)

    def __post_init__(self):
        ns = [int(r["n"]) for r in self.rows]
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise ValueError("series must be sorted by strictly increasing n")

    @property
    def series(self) -> list[tuple[int, float, float]]:
        return [(int(r["n"]), float(r["l1"]), float(r["linf"])) for r in self.rows]

    @property
    def slope_l1(self) -> float:
        return fit_slope([(n, e) for n, e, _ in self.series])

    @property
    def slope_linf(self) -> float:
        return fit_slope([(n, e) for n, _, e in self.series])

    def to_csv(self) -> str:
        return _rows_to_csv(self.rows)

    @classmethod
    def from_csv(cls, text: str, settings: Optional[dict] = None) -> "ConvergenceReport":
        rows = list(csv.DictReader(io.StringIO(text)))
        if not rows:
            raise ValueError("empty convergence CSV")
        first = rows[0]
        dist = Distribution(first["dist"], int(first["d"]))
        l1, linf = theory_exponents(dist, first["estimator"])
        return cls(rows, l1, linf, dict(settings or {}))

    def summary(self) -> dict:
        return {
            "kind": "convergence",
            "settings": self.settings,
            "series": [{"n": n, "l1": a, "linf": b} for n, a, b in self.series],
            "slope_l1": self.slope_l1,
            "slope_linf": self.slope_linf,
            "theory_l1": self.theory_l1,
            "theory_linf": self.theory_linf,
        }


def convergence_experiment(
    dist: Distribution,
    estimator: str,
    rule: KRule,
    n_list: Sequence[int],
    trials: int,
    grid: EvaluationGrid,
    base_seed: int = 0,
    support: Optional[SupportRegion] = None,
    workers: Optional[int] = None,
) -> ConvergenceReport:
    """Run :func:`run_trials` at every n with k (and a) taken from ``rule``."""
    n_list = [int(n) for n in n_list]
    if len(n_list) < 3 or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be strictly increasing with at least three entries")
    if estimator == "knn-bc" and support is None:
        support = dist.support
    rows = []
    for i, n in enumerate(n_list):
        k, a = rule.params(n, dist)
        if estimator == "knn-trunc" and a is None:
            raise ValueError("knn-trunc needs the 'tail' k rule")
        spec = make_spec(estimator, k, a, support)
        report = run_trials(spec, dist, n, grid, trials, base_seed + i * SEED_STRIDE, workers)
        rows.append(report.csv_row())
    l1, linf = theory_exponents(dist, estimator)
    settings = {
        "dist": dist.id,
        "d": dist.d,
        "estimator": estimator,
        "rule": rule.describe(),
        "n_list": n_list,
        "trials": trials,
        "grid_points": grid.size,
        "region": [list(grid.region.lo), list(grid.region.hi)],
        "base_seed": base_seed,
    }
    return ConvergenceReport(rows, l1, linf, settings)


# ---------------------------------------------------------------- kNN vs KDE


@dataclass(frozen=True)
class Family:
    """A one-parameter estimator family searched over a grid.

    ``evaluate(index, param, points)`` returns density values; ``grid(n)``
    lists the candidate parameters for sample size n.
    """

    name: str
    grid: Callable[[int], list]
    evaluate: Callable
    describe: Callable = repr


def log_k_grid(n: int, size: int = 12) -> list[int]:
    ks = np.round(np.geomspace(4, max(4, n / 2), size)).astype(int)
    return sorted({_clamp_k(int(k), n) for k in ks})


def log_h_grid(n: int, size: int = 12) -> list[float]:
    return [float(h) for h in np.geomspace(1.0 / n, 1.0, size)]


def truncated_knn_family(dist: Distribution, c_a: float = 1.0, a_multipliers=(1.0,), size: int = 12) -> Family:
    """Truncated kNN with k on a log grid and a from the tail rule (times each multiplier)."""
    beta = dist.tail_beta
    if beta is None:
        raise ValueError(f"{dist.id} has no tail exponent")

    def grid(n):
        _, a = select_params_tail(n, dist.d, beta, 1.0, c_a)
        return [(k, m * a) for m in a_multipliers for k in log_k_grid(n, size)]

    def evaluate(index, param, pts):
        k, a = param
        return trunc_knn_estimates(index, index.n, k, a, pts)

    return Family("knn-trunc", grid, evaluate)


def kde_family(kernel: KernelId = KernelId.EPANECHNIKOV, size: int = 12) -> Family:
    def evaluate(index, h, pts):
        return kde_estimates(index, index.n, h, kernel, pts)

    return Family("kde", lambda n: log_h_grid(n, size), evaluate)


def _family_row(fam, dist, n, param, l1, linf, trials, seed):
    if fam.name == "kde":
        k, h, a = "", repr(float(param)), ""
    elif isinstance(param, tuple):
        k, h, a = param[0], "", repr(float(param[1]))
    else:
        k, h, a = param, "", ""
    return {
        "dist": dist.id, "d": dist.d, "estimator": fam.name, "n": n, "k": k, "h": h, "a": a,
        "trials": trials, "l1": repr(l1), "linf": repr(linf), "seed": seed,
    }


@dataclass
class RatioReport:
    """Per-n best l1 of two tuned families and their ratio first/second."""

    rows: list[dict]
    tuning: dict = field(default_factory=dict)
    settings: dict = field(default_factory=dict)

    @property
    def series(self) -> list[tuple[int, float, float, float]]:
        out = []
        for knn, kde in zip(self.rows[0::2], self.rows[1::2]):
            a, b = float(knn["l1"]), float(kde["l1"])
            out.append((int(knn["n"]), a, b, a / b))
        return out

    @property
    def ratios(self) -> list[float]:
        return [r for *_, r in self.series]

    def to_csv(self) -> str:
        return _rows_to_csv(self.rows)

    def summary(self) -> dict:
        return {
            "kind": "ratio",
            "settings": self.settings,
            "tuning": self.tuning,
            "series": [
                {"n": n, "l1_knn": a, "l1_kde": b, "ratio": r} for n, a, b, r in self.series
            ],
        }


def _tune_trial(families, grids, dist, n, grid, seed):
    samples = sample(dist, n, seed)
    index = build_index(samples)
    pts = grid.points
    truth = dist.pdf(pts)
    out = []
    for fam, params in zip(families, grids):
        out.append([errors_on_grid(fam.evaluate(index, p, pts), truth, grid.volume) for p in params])
    return out


def compare_knn_kde(
    dist: Distribution,
    n_list: Sequence[int],
    trials: int,
    grid: EvaluationGrid,
    base_seed: int = 0,
    knn: Optional[Family] = None,
    kde: Optional[Family] = None,
    workers: Optional[int] = None,
) -> RatioReport:
    """Grid-search both families at every n on shared samples and report the l1 ratio.

    By default the first family is the truncated kNN estimator (k tuned,
    a from the tail rule) and the second the Epanechnikov KDE (h tuned).
    """
    knn = knn or truncated_knn_family(dist)
    kde = kde or kde_family()
    families = (knn, kde)
    rows = []
    tuning = {}
    for i, n in enumerate(int(v) for v in n_list):
        grids = [fam.grid(n) for fam in families]
        if not all(grids):
            raise ValueError("tuning grids must be nonempty")
        seed0 = base_seed + i * SEED_STRIDE
        seeds = [seed0 + t for t in range(trials)]
        job = lambda s: _tune_trial(families, grids, dist, n, grid, s)
        if workers and workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                per_trial = list(pool.map(job, seeds))
        else:
            per_trial = [job(s) for s in seeds]
        tuning[n] = {}
        for j, (fam, params) in enumerate(zip(families, grids)):
            l1 = [math.fsum(tr[j][p][0] for tr in per_trial) / trials for p in range(len(params))]
            linf = [math.fsum(tr[j][p][1] for tr in per_trial) / trials for p in range(len(params))]
            best = int(np.argmin(l1))
            rows.append(_family_row(fam, dist, n, params[best], l1[best], linf[best], trials, seed0))
            tuning[n][("knn", "kde")[j]] = [[_jsonable(p), e] for p, e in zip(params, l1)]
    settings = {
        "dist": dist.id,
        "d": dist.d,
        "n_list": [int(v) for v in n_list],
        "trials": trials,
        "grid_points": grid.size,
        "region": [list(grid.region.lo), list(grid.region.hi)],
        "base_seed": base_seed,
        "families": [knn.name, kde.name],
    }
    return RatioReport(rows, tuning, settings)


def _jsonable(p):
    if isinstance(p, tuple):
        return [_jsonable(v) for v in p]
    if isinstance(p, (np.integer,)):
        return int(p)
    if isinstance(p, (np.floating,)):
        return float(p)
    return p


def write_summary(report, path) -> None:
    with open(path, "w") as fh:
        json.dump(report.summary(), fh, indent=2, sort_keys=True)
        fh.write("\n")
