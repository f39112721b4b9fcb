"""``knndens`` command line: estimate, eval, converge and compare."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import config as cfgmod
from .config import ConfigError, RunConfig
from .distributions import sample
from .estimators import KernelId, Kde, KnnBoundary, KnnPlain, KnnTruncated, estimate
from .evaluation import CSV_COLUMNS, make_grid, run_trials, write_csv
from .experiments import compare_knn_kde, convergence_experiment, kde_family, truncated_knn_family, write_summary
from .plotting import emit_plot
from .spatial import build_index

EPILOG = f"""\
results.csv columns, in this order: {", ".join(CSV_COLUMNS)}.
Empty cells mean the parameter does not apply (k for kde, h for kNN).
Artifacts (results.csv, summary.json, plot.svg, config.txt) go to
--output-dir, or to ${cfgmod.OUTPUT_ENV} when that is set.
Exit status: 0 on success, 2 for an invalid setting (the message names
the key), 1 when a run fails.
"""


def _add_common(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    add = lambda *a, **kw: p.add_argument(*a, default=S, **kw)
    add("--config", dest="config_file", metavar="FILE", help="flat 'key = value' file; flags override it")
    add("--dist", help="uniform | gaussian | trunc-gaussian | cauchy | heavytail-beta13")
    add("--dim", help="dimension d")
    add("--estimator", help="knn | knn-bc | knn-trunc | kde")
    add("--k", help="neighbor count (estimate, eval)")
    add("--h", help="KDE bandwidth (estimate, eval)")
    add("--a", help="truncation radius for knn-trunc (estimate, eval)")
    add("--kernel", help="box | epanechnikov (default)")
    add("--rule", help="k rule for converge: bounded | linf-unbounded | power | tail")
    add("--c", help="multiplier on the k rule (default 1)")
    add("--c-a", dest="c_a", help="multiplier on the truncation-radius rule (default 1)")
    add("--k-exponent", dest="k_exponent", help="exponent of the power rule (default 2/3)")
    add("--a-multipliers", dest="a_multipliers", help="compare: comma list of factors on the rule's a to search")
    add("--grid-size", dest="grid_size", help="compare: number of k and h grid values (default 12)")
    add("--support", help="box | ball | auto (the law's own support) | none")
    add("--support-lo", dest="support_lo", help="comma list, box support")
    add("--support-hi", dest="support_hi", help="comma list, box support")
    add("--support-center", dest="support_center", help="comma list, ball support")
    add("--support-radius", dest="support_radius", help="ball support radius")
    add("--region-lo", dest="region_lo", help="comma list; default is the effective region")
    add("--region-hi", dest="region_hi", help="comma list")
    add("--mass-tol", dest="mass_tol", help="mass left outside the effective region (default 1e-4)")
    add("--step", help="grid spacing (default 0.1 for compare, else 0.01 for d=1 and 0.05 otherwise)")
    add("--trials", help="trials per sample size (default 20)")
    add("--seed", help="base seed (default 0)")
    add("--n", help="sample size (estimate, eval)")
    add("--n-list", dest="n_list", help="comma list of sample sizes (converge, compare)")
    add("--at", help="query point, comma list (estimate)")
    add("--workers", help="threads for trials (default 1)")
    add("--output-dir", dest="output_dir", help="artifact directory (default ./results)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="knndens",
        description="kNN density estimation benchmarks.",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        "estimate": "print the density estimate at one point",
        "eval": "l1 / linf error of one estimator averaged over trials",
        "converge": "errors over increasing n and fitted log-log slopes",
        "compare": "tuned truncated kNN vs tuned KDE l1 ratio per n",
    }
    for name in cfgmod.COMMANDS:
        p = sub.add_parser(name, help=helps[name], epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
        _add_common(p)
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    values = vars(ns).copy()
    command = values.pop("command")
    base = {}
    path = values.pop("config_file", None)
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
        base = {f: getattr(cfgmod.parse_config(text), f) for f in cfgmod._FIELDS}
        base = {k: v for k, v in base.items() if v is not None}
    base.update(values)
    base["command"] = command
    cfg = cfgmod.from_mapping(base)
    env = os.environ.get(cfgmod.OUTPUT_ENV)
    if env:
        cfg = cfgmod.replace(cfg, output_dir=env)
    return cfg


def _spec(cfg: RunConfig):
    if cfg.estimator == "knn":
        return KnnPlain(cfg.k)
    if cfg.estimator == "knn-bc":
        return KnnBoundary(cfg.k, cfgmod.support_region(cfg))
    if cfg.estimator == "knn-trunc":
        return KnnTruncated(cfg.k, cfg.a)
    return Kde(cfg.h, KernelId(cfg.kernel))


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(cfgmod.serialize_config(cfg))
    return out


def _write_report(out: Path, report) -> None:
    (out / "results.csv").write_text(report.to_csv())
    write_summary(report, out / "summary.json")
    emit_plot(report, out / "plot.svg")


def run(cfg: RunConfig, stdout=None) -> int:
    """Validate and execute ``cfg``; returns the exit status."""
    stdout = stdout or sys.stdout
    cfgmod.validate(cfg)
    dist = cfgmod.distribution(cfg)
    if cfg.command == "estimate":
        samples = sample(dist, cfg.n, cfg.seed)
        value = estimate(_spec(cfg), build_index(samples), [cfg.at])[0]
        print(repr(float(value)), file=stdout)
        return 0

    grid = make_grid(cfgmod.region(cfg), cfgmod.step(cfg))
    if cfg.command == "eval":
        report = run_trials(_spec(cfg), dist, cfg.n, grid, cfg.trials, cfg.seed, cfg.workers)
        out = _outdir(cfg)
        write_csv([report.csv_row()], out / "results.csv")
        summary = {
            "kind": "eval",
            "l1": report.l1,
            "linf": report.linf,
            "per_trial": report.per_trial,
            "config": cfgmod.serialize_config(cfg),
        }
        with open(out / "summary.json", "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"l1 = {report.l1!r}  linf = {report.linf!r}", file=stdout)
        return 0

    ns = cfgmod.n_list(cfg)
    if cfg.command == "converge":
        support = cfgmod.support_region(cfg)
        report = convergence_experiment(
            dist, cfg.estimator, cfgmod.k_rule(cfg), ns, cfg.trials, grid, cfg.seed, support, cfg.workers
        )
        print(f"slope l1 = {report.slope_l1:.4f} (theory {report.theory_l1:.4f}); "
              f"slope linf = {report.slope_linf:.4f} (theory {report.theory_linf:.4f})", file=stdout)
    else:
        knn = truncated_knn_family(dist, cfg.c_a, cfg.a_multipliers, cfg.grid_size)
        kde = kde_family(KernelId(cfg.kernel), cfg.grid_size)
        report = compare_knn_kde(dist, ns, cfg.trials, grid, cfg.seed, knn, kde, cfg.workers)
        for n, a, b, r in report.series:
            print(f"n = {n}: l1 knn = {a:.5g}, l1 kde = {b:.5g}, ratio = {r:.4f}", file=stdout)
    _write_report(_outdir(cfg), report)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        return run(config_from_args(ns))
    except ConfigError as exc:
        print(f"knndens: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # run failure, reported without a traceback
        print(f"knndens: run failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
