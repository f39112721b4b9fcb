import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from knndens.distributions import Distribution
from knndens.evaluation import make_grid
from knndens.experiments import (
    ConvergenceReport,
    KRule,
    compare_knn_kde,
    convergence_experiment,
    fit_slope,
    kde_family,
    log_h_grid,
    log_k_grid,
    select_k_bounded,
    select_k_linf_unbounded,
    select_params_tail,
    tail_exponents,
    theory_exponents,
    truncated_knn_family,
    write_summary,
)
from knndens.geometry import Box


def test_select_k_bounded_examples():
    assert select_k_bounded(1000, 1, 1) == 100
    assert select_k_bounded(10**4, 2, 1) == 100
    assert select_k_bounded(10, 1, 0.01) == 2
    assert select_k_bounded(10, 1, 100) == 9
    with pytest.raises(ValueError):
        select_k_bounded(3, 1)


def test_select_params_tail_examples():
    k, a = select_params_tail(10**5, 1, 1 / 3)
    assert k == 1000
    assert a == pytest.approx(10**-0.5, rel=1e-12)
    assert tail_exponents(1, 1.0) == pytest.approx((0.8, 0.2))
    assert select_params_tail(5000, 2, 0.5) == select_params_tail(5000, 2, 0.9)
    for beta in (0.0, -0.1, 1.5):
        with pytest.raises(ValueError):
            select_params_tail(1000, 1, beta)


def test_select_k_linf_unbounded_examples():
    assert select_k_linf_unbounded(10**5, 1) == 10000
    assert select_k_linf_unbounded(243, 1) == 81
    # for d = 2 the sup-norm rule reduces to k ~ N^(2/3)
    assert select_k_linf_unbounded(10**6, 2) == 10**4


@settings(max_examples=200, deadline=None)
@given(st.integers(4, 10**7), st.integers(1, 6), st.floats(1e-3, 1e3), st.floats(0.01, 1.0))
def test_k_rules_in_range(n, d, c, beta):
    for k in (select_k_bounded(n, d, c), select_k_linf_unbounded(n, d, c), select_params_tail(n, d, beta, c, c)[0]):
        assert 2 <= k <= n - 1


@settings(max_examples=50, deadline=None)
@given(st.integers(4, 10**6), st.integers(1, 5), st.floats(0.5, 1.0))
def test_beta_saturation(n, d, beta):
    assert select_params_tail(n, d, beta) == select_params_tail(n, d, 0.5)


def test_fit_slope_examples():
    assert fit_slope([(100, 10), (1000, 10**0.5), (10000, 1)]) == pytest.approx(0.5, abs=1e-12)
    assert fit_slope([(10, 3.0), (20, 3.0), (40, 3.0)]) == 0.0
    rng = np.random.default_rng(0)
    ns = np.geomspace(500, 32000, 6)
    errs = 2.0 * ns**-0.25 * (1 + rng.uniform(-1e-3, 1e-3, ns.size))
    assert abs(fit_slope(list(zip(ns, errs))) - 0.25) < 0.01
    with pytest.raises(ValueError):
        fit_slope([(1, 1.0), (2, 0.0), (3, 1.0)])
    with pytest.raises(ValueError):
        fit_slope([(1, 1.0), (2, 1.0)])


@settings(max_examples=50, deadline=None)
@given(st.floats(-2, 2), st.floats(1e-3, 1e3), st.lists(st.integers(2, 10**6), min_size=3, max_size=8, unique=True))
def test_fit_slope_exact_on_power_laws(p, c, ns):
    ns = sorted(ns)
    series = [(n, c * n**-p) for n in ns]
    x = np.log(ns)
    slope = fit_slope(series)
    resid = np.log([e for _, e in series]) - (math.log(c) - slope * x)
    assert abs(slope - p) < 1e-9
    assert np.max(np.abs(resid)) < 1e-10


def test_theory_exponents():
    assert theory_exponents(Distribution("uniform"), "knn-bc") == pytest.approx((1 / 3, 1 / 3))
    assert theory_exponents(Distribution("uniform", 2), "knn-bc") == pytest.approx((0.25, 0.25))
    l1, linf = theory_exponents(Distribution("gaussian"), "knn")
    assert l1 == pytest.approx(0.4) and linf == pytest.approx(1 / 3)
    assert theory_exponents(Distribution("cauchy"), "knn-trunc")[0] == pytest.approx(0.4)
    assert theory_exponents(Distribution("heavytail-beta13"), "knn-trunc")[0] == pytest.approx(0.3)
    assert theory_exponents(Distribution("gaussian", 3), "knn")[1] == pytest.approx(2 / 7)


def test_krule():
    u = Distribution("uniform")
    assert KRule("bounded").params(1000, u) == (100, None)
    assert KRule("power", exponent=0.5).params(10**4, u) == (100, None)
    k, a = KRule("tail").params(10**5, Distribution("heavytail-beta13"))
    assert k == 1000
    with pytest.raises(ValueError):
        KRule("tail").params(1000, u)
    with pytest.raises(ValueError):
        KRule("nope")


def _small_convergence(workers=None):
    dist = Distribution("uniform")
    grid = make_grid(dist.default_region, 0.02)
    return convergence_experiment(dist, "knn-bc", KRule("bounded"), [200, 400, 800], 5, grid, 3, workers=workers)


def test_convergence_report_roundtrip():
    rep = _small_convergence()
    assert [n for n, *_ in rep.series] == [200, 400, 800]
    assert rep.theory_l1 == pytest.approx(1 / 3)
    text = rep.to_csv()
    again = ConvergenceReport.from_csv(text, rep.settings)
    assert again.to_csv() == text
    assert again.slope_l1 == rep.slope_l1 and again.slope_linf == rep.slope_linf
    with pytest.raises(ValueError):
        ConvergenceReport(list(reversed(rep.rows)), 0.3, 0.3)


def test_convergence_serial_parallel_identical():
    assert _small_convergence().to_csv() == _small_convergence(workers=3).to_csv()


def test_convergence_requires_increasing_n():
    dist = Distribution("uniform")
    grid = make_grid(dist.default_region, 0.1)
    with pytest.raises(ValueError):
        convergence_experiment(dist, "knn", KRule(), [100, 100, 200], 2, grid)
    with pytest.raises(ValueError):
        convergence_experiment(dist, "knn", KRule(), [100, 200], 2, grid)


def test_convergence_trunc_uses_tail_rule():
    dist = Distribution("cauchy")
    grid = make_grid(Box((-20.0,), (20.0,)), 0.1)
    rep = convergence_experiment(dist, "knn-trunc", KRule("tail"), [100, 200, 400], 2, grid)
    assert rep.rows[0]["a"] != ""
    with pytest.raises(ValueError):
        convergence_experiment(dist, "knn-trunc", KRule("bounded"), [100, 200, 400], 2, grid)


def test_tuning_grids():
    assert log_k_grid(1000)[0] == 4 and log_k_grid(1000)[-1] == 500
    assert len(log_k_grid(10**5)) == 12
    assert all(2 <= k <= 9 for k in log_k_grid(10))
    h = log_h_grid(1000)
    assert len(h) == 12 and h[0] == pytest.approx(1e-3) and h[-1] == pytest.approx(1.0)


def test_compare_stub_identical_methods():
    dist = Distribution("cauchy")
    grid = make_grid(Box((-30.0,), (30.0,)), 0.1)
    fam = truncated_knn_family(dist)
    rep = compare_knn_kde(dist, [500, 1000], 2, grid, knn=fam, kde=fam)
    assert rep.ratios == [1.0, 1.0]
    kde = kde_family()
    rep = compare_knn_kde(dist, [500], 2, grid, knn=kde, kde=kde)
    assert rep.ratios == [1.0]


def test_compare_report(tmp_path):
    dist = Distribution("heavytail-beta13")
    grid = make_grid(Box((-40.0,), (40.0,)), 0.1)
    rep = compare_knn_kde(dist, [500, 1000], 3, grid, base_seed=2)
    assert len(rep.rows) == 4
    assert [r["estimator"] for r in rep.rows] == ["knn-trunc", "kde", "knn-trunc", "kde"]
    assert all(r > 0 for r in rep.ratios)
    for n, a, b, r in rep.series:
        assert r == a / b
    # the reported l1 is the best over the tuning grid
    best = min(e for _, e in rep.tuning[500]["knn"])
    assert float(rep.rows[0]["l1"]) == best
    assert rep.to_csv() == compare_knn_kde(dist, [500, 1000], 3, grid, base_seed=2, workers=3).to_csv()
    write_summary(rep, tmp_path / "s.json")
    data = json.loads((tmp_path / "s.json").read_text())
    assert data["kind"] == "ratio" and len(data["series"]) == 2


def test_compare_a_multipliers_extend_grid():
    dist = Distribution("cauchy")
    fam = truncated_knn_family(dist, a_multipliers=(0.5, 1.0, 2.0))
    grid = fam.grid(1000)
    assert len(grid) == 3 * len(log_k_grid(1000))
    assert len({a for _, a in grid}) == 3
    with pytest.raises(ValueError):
        truncated_knn_family(Distribution("uniform"))
