"""Flat ``key = value`` run configuration shared by the CLI and config files."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, fields
from typing import Optional

from .distributions import DISTRIBUTION_IDS, Distribution, effective_region
from .estimators import KernelId
from .experiments import KRule
from .geometry import Ball, Box, Unbounded

COMMANDS = ("estimate", "eval", "converge", "compare")
ESTIMATORS = ("knn", "knn-bc", "knn-trunc", "kde")
SUPPORT_KINDS = ("box", "ball", "auto", "none")
OUTPUT_ENV = "KNNDENS_OUTPUT_DIR"
MAX_GRID_POINTS = 20_000_000


class ConfigError(ValueError):
    """Invalid setting; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


@dataclass(frozen=True)
class RunConfig:
    command: str
    dist: str = "uniform"
    dim: int = 1
    estimator: str = "knn"
    k: Optional[int] = None
    h: Optional[float] = None
    a: Optional[float] = None
    kernel: str = "epanechnikov"
    rule: str = "bounded"
    c: float = 1.0
    c_a: float = 1.0
    k_exponent: float = 2.0 / 3.0
    a_multipliers: tuple = (1.0,)
    grid_size: int = 12
    support: Optional[str] = None
    support_lo: Optional[tuple] = None
    support_hi: Optional[tuple] = None
    support_center: Optional[tuple] = None
    support_radius: Optional[float] = None
    region_lo: Optional[tuple] = None
    region_hi: Optional[tuple] = None
    mass_tol: float = 1e-4
    step: Optional[float] = None
    trials: int = 20
    seed: int = 0
    n: Optional[int] = None
    n_list: Optional[tuple] = None
    at: Optional[tuple] = None
    workers: int = 1
    output_dir: str = "results"


_FIELDS = {f.name: f for f in fields(RunConfig)}
_INT = {"dim", "k", "grid_size", "trials", "seed", "n", "workers"}
_FLOAT = {"h", "a", "c", "c_a", "k_exponent", "support_radius", "mass_tol", "step"}
_FLOAT_TUPLE = {"a_multipliers", "support_lo", "support_hi", "support_center", "region_lo", "region_hi", "at"}
_INT_TUPLE = {"n_list"}


def _parse_int(key, text):
    try:
        v = float(text)
    except ValueError:
        raise ConfigError(key, f"expected an integer, got {text!r}") from None
    if not math.isfinite(v) or v != int(v):
        raise ConfigError(key, f"expected an integer, got {text!r}")
    return int(v)


def _parse_float(key, text):
    try:
        v = float(text)
    except ValueError:
        raise ConfigError(key, f"expected a number, got {text!r}") from None
    if not math.isfinite(v):
        raise ConfigError(key, f"expected a finite number, got {text!r}")
    return v


def coerce(key: str, value):
    """Convert a string (or already typed value) to the field's type."""
    if key not in _FIELDS:
        raise ConfigError(key, "unknown setting")
    if value is None:
        return None
    if key in _INT:
        return _parse_int(key, value) if isinstance(value, str) else int(value)
    if key in _FLOAT:
        return _parse_float(key, value) if isinstance(value, str) else float(value)
    if key in _FLOAT_TUPLE or key in _INT_TUPLE:
        parts = [p.strip() for p in value.split(",")] if isinstance(value, str) else list(value)
        if not parts or any(p == "" for p in parts):
            raise ConfigError(key, f"expected a comma-separated list, got {value!r}")
        conv = _parse_int if key in _INT_TUPLE else _parse_float
        return tuple(conv(key, p) if isinstance(p, str) else conv(key, repr(p)) for p in parts)
    return str(value).strip()


def from_mapping(mapping: dict) -> RunConfig:
    if "command" not in mapping:
        raise ConfigError("command", "missing")
    return RunConfig(**{k: coerce(k, v) for k, v in mapping.items()})


def _fmt(value) -> str:
    if isinstance(value, tuple):
        return ",".join(_fmt(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_config(cfg: RunConfig) -> str:
    """One ``key = value`` line per set field, in declaration order."""
    lines = []
    for f in fields(RunConfig):
        v = getattr(cfg, f.name)
        if v is not None:
            lines.append(f"{f.name} = {_fmt(v)}")
    return "\n".join(lines) + "\n"


def parse_config(text: str) -> RunConfig:
    """Inverse of :func:`serialize_config`; ``#`` starts a comment line."""
    mapping = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(key or f"line {lineno}", "expected 'key = value'")
        if key in mapping:
            raise ConfigError(key, "set more than once")
        mapping[key] = value.strip()
    return from_mapping(mapping)


def replace(cfg: RunConfig, **changes) -> RunConfig:
    return dataclasses.replace(cfg, **{k: coerce(k, v) for k, v in changes.items()})


# ------------------------------------------------------------------ validation


def _positive(cfg, key):
    v = getattr(cfg, key)
    if v is not None and not v > 0:
        raise ConfigError(key, f"must be positive, got {v}")


def _dim_tuple(cfg, key):
    v = getattr(cfg, key)
    if v is not None and len(v) != cfg.dim:
        raise ConfigError(key, f"needs {cfg.dim} coordinates, got {len(v)}")


def distribution(cfg: RunConfig) -> Distribution:
    if cfg.dist not in DISTRIBUTION_IDS:
        raise ConfigError("dist", f"unknown distribution {cfg.dist!r}; expected one of {', '.join(DISTRIBUTION_IDS)}")
    if cfg.dim < 1:
        raise ConfigError("dim", f"must be >= 1, got {cfg.dim}")
    return Distribution(cfg.dist, cfg.dim)


def support_region(cfg: RunConfig):
    """Support for the boundary-corrected estimator, or None when unset."""
    kind = cfg.support
    if kind is None or kind == "none":
        return None
    if kind not in SUPPORT_KINDS:
        raise ConfigError("support", f"unknown support kind {kind!r}; expected one of {', '.join(SUPPORT_KINDS)}")
    if kind == "auto":
        sup = distribution(cfg).support
        if isinstance(sup, Unbounded):
            raise ConfigError("support", f"{cfg.dist} has unbounded support; 'auto' needs a bounded law")
        return sup
    if kind == "box":
        for key in ("support_lo", "support_hi"):
            if getattr(cfg, key) is None:
                raise ConfigError(key, "required for support = box")
            _dim_tuple(cfg, key)
        try:
            return Box(cfg.support_lo, cfg.support_hi)
        except ValueError as exc:
            raise ConfigError("support_hi", str(exc)) from None
    if cfg.support_center is None:
        raise ConfigError("support_center", "required for support = ball")
    _dim_tuple(cfg, "support_center")
    if cfg.support_radius is None or not cfg.support_radius > 0:
        raise ConfigError("support_radius", "a positive radius is required for support = ball")
    return Ball(cfg.support_center, cfg.support_radius)


def region(cfg: RunConfig) -> Box:
    if (cfg.region_lo is None) != (cfg.region_hi is None):
        raise ConfigError("region_lo" if cfg.region_lo is None else "region_hi", "set both region_lo and region_hi")
    if cfg.region_lo is None:
        if not 0.0 < cfg.mass_tol < 1.0:
            raise ConfigError("mass_tol", f"must lie in (0, 1), got {cfg.mass_tol}")
        return effective_region(distribution(cfg), cfg.mass_tol)
    _dim_tuple(cfg, "region_lo")
    _dim_tuple(cfg, "region_hi")
    try:
        return Box(cfg.region_lo, cfg.region_hi)
    except ValueError as exc:
        raise ConfigError("region_hi", str(exc)) from None


def step(cfg: RunConfig) -> float:
    if cfg.step is not None:
        return cfg.step
    if cfg.command == "compare":
        return 0.1  # heavy-tail regions span thousands of units
    return 0.01 if cfg.dim == 1 else 0.05


def default_n_list(command: str) -> tuple:
    if command == "compare":
        return (1000, 3162, 10000, 31623, 100000)
    return tuple(500 * 2**i for i in range(6))


def n_list(cfg: RunConfig) -> tuple:
    return cfg.n_list if cfg.n_list is not None else default_n_list(cfg.command)


def k_rule(cfg: RunConfig) -> KRule:
    try:
        return KRule(cfg.rule, cfg.c, cfg.c_a, cfg.k_exponent)
    except ValueError as exc:
        raise ConfigError("rule", str(exc)) from None


def validate(cfg: RunConfig) -> None:
    """Raise :class:`ConfigError` naming the first offending key."""
    if cfg.command not in COMMANDS:
        raise ConfigError("command", f"unknown command {cfg.command!r}; expected one of {', '.join(COMMANDS)}")
    dist = distribution(cfg)
    if cfg.estimator not in ESTIMATORS:
        raise ConfigError("estimator", f"unknown estimator {cfg.estimator!r}; expected one of {', '.join(ESTIMATORS)}")
    try:
        KernelId(cfg.kernel)
    except ValueError:
        raise ConfigError("kernel", f"unknown kernel {cfg.kernel!r}; expected box or epanechnikov") from None
    for key in ("h", "a", "c", "c_a", "k_exponent", "step", "trials", "workers", "grid_size"):
        _positive(cfg, key)
    if cfg.a_multipliers is not None and min(cfg.a_multipliers) <= 0:
        raise ConfigError("a_multipliers", "entries must be positive")
    region(cfg)
    s = step(cfg)
    span = min(hi - lo for lo, hi in zip(region(cfg).lo, region(cfg).hi))
    if cfg.command != "estimate":
        if s > span:
            raise ConfigError("step", f"grid step {s} exceeds the region side length {span}")
        box = region(cfg)
        points = math.prod(math.floor((hi - lo) / s + 1e-9) + 1 for lo, hi in zip(box.lo, box.hi))
        if points > MAX_GRID_POINTS:
            raise ConfigError(
                "step",
                f"the grid would hold {points} points (limit {MAX_GRID_POINTS}); "
                "raise step, raise mass_tol or set region_lo/region_hi",
            )
    if cfg.seed < 0:
        raise ConfigError("seed", f"must be nonnegative, got {cfg.seed}")

    if cfg.command in ("estimate", "eval"):
        if cfg.estimator == "knn-bc" and support_region(cfg) is None:
            raise ConfigError("support", "knn-bc needs a support region (--support box|ball|auto)")
        if cfg.n is None:
            raise ConfigError("n", "sample size is required")
        if cfg.n < 2:
            raise ConfigError("n", f"must be >= 2, got {cfg.n}")
        if cfg.estimator == "kde":
            if cfg.h is None:
                raise ConfigError("h", "bandwidth is required for kde")
        else:
            if cfg.k is None:
                raise ConfigError("k", f"k is required for {cfg.estimator}")
            if cfg.k < 2:
                raise ConfigError("k", f"must be >= 2, got {cfg.k}")
            if cfg.k >= cfg.n:
                raise ConfigError("k", f"must be < n={cfg.n}, got {cfg.k}")
        if cfg.estimator == "knn-trunc" and cfg.a is None:
            raise ConfigError("a", "truncation radius is required for knn-trunc")
        support_region(cfg)
        if cfg.command == "estimate":
            if cfg.at is None:
                raise ConfigError("at", "query point is required")
            _dim_tuple(cfg, "at")
    elif cfg.command == "converge":
        if cfg.estimator == "kde":
            raise ConfigError("estimator", "converge runs the kNN estimators; use compare for kde")
        rule = k_rule(cfg)
        if cfg.estimator == "knn-trunc" and rule.kind != "tail":
            raise ConfigError("rule", "knn-trunc takes its truncation radius from the 'tail' rule")
        if rule.kind == "tail" and dist.tail_beta is None:
            raise ConfigError("rule", f"the tail rule needs a heavy-tailed law; {cfg.dist} is bounded")
        if cfg.estimator == "knn-bc":
            support_region(cfg if cfg.support not in (None, "none") else replace(cfg, support="auto"))
        ns = n_list(cfg)
        if len(ns) < 3 or any(b <= a for a, b in zip(ns, ns[1:])):
            raise ConfigError("n_list", "needs at least three strictly increasing sizes")
        if ns[0] < 4:
            raise ConfigError("n_list", "sizes must be >= 4")
    else:
        if dist.tail_beta is None:
            raise ConfigError("dist", f"compare needs a heavy-tailed law; {cfg.dist} has bounded support")
        ns = n_list(cfg)
        if not ns or any(b <= a for a, b in zip(ns, ns[1:])) or ns[0] < 8:
            raise ConfigError("n_list", "needs strictly increasing sizes >= 8")
