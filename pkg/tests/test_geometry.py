import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from knndens import _backend, geometry
from knndens.geometry import (
    Ball,
    Box,
    Unbounded,
    ball_volume,
    cap_volume,
    clipped_ball_volume,
    clipped_ball_volumes,
    unit_ball_volume,
)


def test_unit_ball_volume():
    assert unit_ball_volume(1) == 2.0
    assert unit_ball_volume(2) == pytest.approx(math.pi, rel=1e-15)
    assert unit_ball_volume(3) == pytest.approx(4 * math.pi / 3, rel=1e-14)
    assert unit_ball_volume(4) == pytest.approx(math.pi**2 / 2, rel=1e-14)
    with pytest.raises(ValueError):
        unit_ball_volume(0)


def test_ball_volume():
    assert ball_volume(1, 0.5) == 1.0
    assert ball_volume(2, 1) == pytest.approx(math.pi)
    assert ball_volume(2, 2) == pytest.approx(4 * math.pi)
    assert ball_volume(3, 0) == 0.0
    with pytest.raises(ValueError):
        ball_volume(2, -1)


def test_support_validation():
    with pytest.raises(ValueError):
        Box((0.0, 1.0), (1.0, 1.0))
    with pytest.raises(ValueError):
        Ball((0.0,), 0.0)


def test_cap_volume_limits():
    assert cap_volume(3, 1.0, 1.0) == 0.0
    assert cap_volume(3, 1.0, -1.0) == pytest.approx(unit_ball_volume(3))
    assert cap_volume(3, 1.0, 0.0) == pytest.approx(unit_ball_volume(3) / 2)
    # 3-d cap of height h: pi h^2 (3r - h) / 3
    h = 0.4
    assert cap_volume(3, 1.0, 1 - h) == pytest.approx(math.pi * h * h * (3 - h) / 3, rel=1e-13)


def test_clipped_examples():
    assert clipped_ball_volume(Box((0.0,), (1.0,)), [0.1], 0.3) == pytest.approx(0.4, abs=1e-15)
    assert clipped_ball_volume(Ball((0.0,), 1.0), [0.0], 0.5) == 1.0
    quarter = clipped_ball_volume(Box((0.0, 0.0), (1.0, 1.0)), (0.0, 0.0), 0.5)
    assert abs(quarter / (math.pi / 16) - 1) < 1e-3
    assert clipped_ball_volume(Unbounded(), (0.3, 0.1), 2.0) == pytest.approx(4 * math.pi)


def test_clipped_errors():
    with pytest.raises(ValueError):
        clipped_ball_volume(Box((0.0,), (1.0,)), [0.5], 0.0)
    with pytest.raises(ValueError):
        clipped_ball_volume(Box((0.0, 0.0), (1.0, 1.0)), [0.5], 0.1)


def test_octant_and_half_ball():
    unit = Box((0.0,) * 3, (1.0,) * 3)
    octant = clipped_ball_volume(unit, (0.0, 0.0, 0.0), 0.5)
    assert abs(octant / (unit_ball_volume(3) * 0.125 / 8) - 1) < 1e-3
    half = clipped_ball_volume(unit, (0.5, 0.5, 0.0), 0.3)  # single-axis exact path
    assert half == pytest.approx(unit_ball_volume(3) * 0.027 / 2, rel=1e-13)


def test_box_swallowed_by_ball():
    box = Box((0.0, 0.0), (1.0, 2.0))
    assert clipped_ball_volume(box, (0.5, 1.0), 10.0) == 2.0


def test_ball_support_lens_2d():
    # two unit disks at distance 1: lens area 2 pi / 3 - sqrt(3) / 2
    v = clipped_ball_volume(Ball((0.0, 0.0), 1.0), (1.0, 0.0), 1.0)
    assert v == pytest.approx(2 * math.pi / 3 - math.sqrt(3) / 2, rel=1e-13)


def _mc_volume(support, x, r, n=400_000, seed=0):
    rng = np.random.default_rng(seed)
    d = len(x)
    pts = rng.uniform(-1, 1, size=(n, d))
    pts = pts[np.sum(pts * pts, axis=1) <= 1] * r + np.asarray(x)
    frac = support.contains(pts).mean()
    return ball_volume(d, r) * frac, ball_volume(d, r) * math.sqrt(frac * (1 - frac) / len(pts))


@pytest.mark.parametrize("d", [2, 3])
def test_box_against_monte_carlo(d):
    rng = np.random.default_rng(d)
    box = Box((0.0,) * d, (1.0,) * d)
    for _ in range(10):
        x = rng.uniform(-0.2, 1.2, d)
        r = rng.uniform(0.2, 1.2)
        mc, se = _mc_volume(box, x, r, seed=int(rng.integers(1 << 30)))
        assert abs(clipped_ball_volume(box, x, r) - mc) < 5 * se + 1e-12


def test_ball_against_monte_carlo():
    ball = Ball((0.2, -0.1, 0.4), 0.8)
    for x, r in [((0.9, 0.0, 0.4), 0.5), ((0.0, 0.0, 0.0), 1.5), ((1.2, 0.3, 0.0), 0.9)]:
        mc, se = _mc_volume(ball, x, r)
        assert abs(clipped_ball_volume(ball, x, r) - mc) < 5 * se + 1e-12


def _random_support(rng, d):
    lo = rng.uniform(-1, 0, d)
    if rng.random() < 0.7:
        return Box(tuple(lo), tuple(lo + rng.uniform(0.3, 2.0, d)))
    return Ball(tuple(lo), float(rng.uniform(0.3, 1.5)))


def test_dominance_and_containment_random():
    rng = np.random.default_rng(7)
    for _ in range(100):
        d = int(rng.integers(1, 4))
        sup = _random_support(rng, d)
        if isinstance(sup, Box):
            x = rng.uniform(sup.lo, sup.hi)
            room = min(np.min(x - np.array(sup.lo)), np.min(np.array(sup.hi) - x))
        else:
            c = np.array(sup.center)
            x = c + rng.uniform(-0.5, 0.5, d) * sup.radius / math.sqrt(d)
            room = sup.radius - np.linalg.norm(x - c)
        inner = room * rng.uniform(0.1, 0.99)
        assert clipped_ball_volume(sup, x, inner) == ball_volume(d, inner)
        outer = room * rng.uniform(1.05, 3.0)
        v = clipped_ball_volume(sup, x, outer)
        assert 0 <= v < ball_volume(d, outer)


def test_monotone_in_radius_random():
    rng = np.random.default_rng(11)
    for _ in range(100):
        d = int(rng.integers(1, 4))
        sup = _random_support(rng, d)
        x = rng.uniform(-1.2, 1.2, d)
        rs = np.sort(rng.uniform(0.01, 3.0, 25))
        v = clipped_ball_volumes(sup, np.tile(x, (25, 1)), rs)
        assert np.all(v >= 0)
        assert np.all(v <= ball_volume(d, rs) * (1 + 1e-12))
        # exact paths are monotone; the QMC path up to rounding
        assert np.all(np.diff(v) >= -1e-12 * v[1:])


@settings(max_examples=60, deadline=None)
@given(
    st.integers(1, 3),
    st.lists(st.floats(-0.5, 1.5), min_size=3, max_size=3),
    st.floats(0.05, 2.0),
    st.lists(st.floats(-50, 50), min_size=3, max_size=3),
)
def test_translation_invariance(d, x, r, shift):
    box = Box((0.0,) * d, (1.0,) * d)
    ball = Ball((0.5,) * d, 0.7)
    x = np.array(x[:d])
    s = np.array(shift[:d])
    for sup in (box, ball):
        a = clipped_ball_volume(sup, x, r)
        b = clipped_ball_volume(sup.translated(s), x + s, r)
        assert b == pytest.approx(a, rel=1e-9, abs=1e-12)


def test_deterministic_point_set():
    a = geometry.face_points(2)
    assert np.array_equal(a, geometry.face_points(2))
    assert a.shape == (geometry.QMC_MAX_POINTS, 2)
    assert not a.flags.writeable


@pytest.mark.parametrize("d", [2, 3])
def test_backends_agree_on_qmc(d, monkeypatch):
    rng = np.random.default_rng(5)
    x = rng.uniform(-0.2, 1.2, (200, d))
    r = rng.uniform(0.05, 1.5, 200)
    box = Box((0.0,) * d, (1.0,) * d)
    results = []
    for name in _backend.available():
        monkeypatch.setattr(geometry, "kernels", _backend.get(name))
        results.append(clipped_ball_volumes(box, x, r))
    for other in results[1:]:
        assert np.array_equal(results[0], other)
