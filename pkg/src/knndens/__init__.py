"""k-nearest-neighbor density estimation with boundary correction and tail truncation."""

from ._backend import BACKEND
from .distributions import DISTRIBUTION_IDS, Distribution, SampleSet, effective_region, pdf_eval, sample
from .estimators import (
    DegenerateEstimateError,
    Kde,
    KernelId,
    KnnBoundary,
    KnnPlain,
    KnnTruncated,
    bc_knn_estimate,
    estimate,
    kde_estimate,
    knn_estimate,
    trunc_knn_estimate,
)
from .evaluation import ErrorReport, EvaluationGrid, TrialError, eval_errors, make_grid, run_trials
from .experiments import (
    ConvergenceReport,
    KRule,
    RatioReport,
    compare_knn_kde,
    convergence_experiment,
    fit_slope,
    select_k_bounded,
    select_k_linf_unbounded,
    select_params_tail,
)
from .geometry import Ball, Box, Unbounded, ball_volume, clipped_ball_volume, unit_ball_volume
from .spatial import SpatialIndex, build_index, kth_distance, range_count

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "DISTRIBUTION_IDS", "Distribution", "SampleSet", "effective_region", "pdf_eval", "sample",
    "DegenerateEstimateError", "Kde", "KernelId", "KnnBoundary", "KnnPlain", "KnnTruncated",
    "bc_knn_estimate", "estimate", "kde_estimate", "knn_estimate", "trunc_knn_estimate",
    "ErrorReport", "EvaluationGrid", "TrialError", "eval_errors", "make_grid", "run_trials",
    "ConvergenceReport", "KRule", "RatioReport", "compare_knn_kde", "convergence_experiment", "fit_slope",
    "select_k_bounded", "select_k_linf_unbounded", "select_params_tail",
    "Ball", "Box", "Unbounded", "ball_volume", "clipped_ball_volume", "unit_ball_volume",
    "SpatialIndex", "build_index", "kth_distance", "range_count",
]
