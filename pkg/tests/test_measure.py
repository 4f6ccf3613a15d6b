"""Measure container, spatial index, and regularity profile checks."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rectiscan import (DiscreteMeasure, SpatialIndex, ad_regularity_profile,
                       ball_mass_brute, load_csv, min_spacing, save_csv)
from rectiscan.measure import BoundaryGauge

from conftest import make_measure


# ---------------------------------------------------------------------------
# container validation

def test_rejects_malformed_inputs():
    pts = np.zeros((4, 2))
    pts[:, 0] = np.arange(4.0)
    with pytest.raises(ValueError):
        DiscreteMeasure(np.zeros((0, 2)), np.ones(0), 1, 0.1)
    with pytest.raises(ValueError):
        DiscreteMeasure(pts, np.ones(3), 1, 0.1)
    with pytest.raises(ValueError):
        DiscreteMeasure(pts, np.zeros(4), 1, 0.1)
    with pytest.raises(ValueError):
        DiscreteMeasure(pts, np.ones(4), 3, 0.1)
    with pytest.raises(ValueError):
        DiscreteMeasure(pts, np.ones(4), 1, -1.0)
    with pytest.raises(ValueError):
        DiscreteMeasure(pts, np.ones(4), 1, 100.0)
    bad = pts.copy()
    bad[0, 0] = np.nan
    with pytest.raises(ValueError):
        DiscreteMeasure(bad, np.ones(4), 1, 0.1)


def test_create_fills_defaults():
    pts = np.linspace(0.0, 1.0, 11)[:, None]
    m = make_measure(pts)
    # uniform weights normalized to diameter**n mass
    assert m.total_mass() == pytest.approx(1.0)
    assert np.all(m.weights == m.weights[0])
    assert m.resolution == pytest.approx(0.3)
    assert m.diameter() == pytest.approx(1.0)
    assert m.d == 1


def test_min_spacing_on_grid():
    pts = np.stack(np.meshgrid(np.arange(5.0), np.arange(5.0)),
                   -1).reshape(-1, 2)
    m = make_measure(pts, n=2)
    assert min_spacing(m) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        min_spacing(make_measure(np.zeros((1, 2)), resolution=0.1))


def test_candidate_diameter_matches_brute_force(rng):
    # the probe-direction shortcut must agree with all-pairs on a big cloud
    pts = rng.normal(size=(5000, 3))
    m = make_measure(pts, n=2)
    diff = pts[:, None, :] - pts[None, :, :]
    exact = float(np.sqrt((diff ** 2).sum(-1)).max())
    assert m.diameter() <= exact + 1e-12
    assert m.diameter() >= 0.98 * exact


# ---------------------------------------------------------------------------
# ball queries

def test_indexed_mass_equals_brute_force(indexed_circle, rng):
    m = indexed_circle.measure
    for _ in range(50):
        x = rng.normal(scale=0.7, size=2)
        r = float(rng.uniform(0.01, 1.5))
        assert indexed_circle.ball_mass(x, r) == ball_mass_brute(m, x, r)


def test_dense_path_equals_brute_force(indexed_circle, rng):
    # radii past the dense cutoff switch to a linear scan; same bits required
    m = indexed_circle.measure
    for r in (2.0, 3.0, 10.0):
        x = rng.normal(scale=0.3, size=2)
        assert r >= indexed_circle._dense_cut
        assert indexed_circle.ball_mass(x, r) == ball_mass_brute(m, x, r)


def test_ball_indices_sorted_and_closed(indexed_segment):
    m = indexed_segment.measure
    x = m.points[1000]
    r = float(np.linalg.norm(m.points[1010] - x))
    idx = indexed_segment.ball_indices(x, r)
    assert np.all(np.diff(idx) > 0)
    # closed ball: the boundary point at exactly distance r is a member
    assert 1010 in idx and 990 in idx
    assert indexed_segment.ball_count(x, r) == idx.size


def test_ball_query_rejects_bad_args(indexed_segment):
    with pytest.raises(ValueError):
        indexed_segment.ball_indices(np.array([0.5, 0.0]), -0.1)
    with pytest.raises(ValueError):
        indexed_segment.ball_indices(np.array([np.nan, 0.0]), 0.1)


def test_circle_ball_mass_matches_arc_length(indexed_circle):
    # mass of B(x, r) around a support point is the arc within chord r:
    # 4 rho asin(r / (2 rho)) up to one sample spacing
    m = indexed_circle.measure
    rho = 1.0
    spacing = 2 * math.pi * rho / m.points.shape[0]
    for r in (0.05, 0.2, 0.7, 1.4):
        got = indexed_circle.ball_mass(m.points[0], r)
        want = 4 * rho * math.asin(r / (2 * rho))
        assert abs(got - want) <= 3 * spacing


def test_dilation_covariance(indexed_segment, rng):
    # scaling points and radius by lambda leaves memberships identical
    m = indexed_segment.measure
    big = DiscreteMeasure(2.0 * m.points, m.weights, m.n, 2.0 * m.resolution)
    idx2 = SpatialIndex(big)
    for _ in range(20):
        x = rng.uniform([-0.2, -0.05], [1.2, 0.05])
        r = float(rng.uniform(0.01, 0.5))
        a = indexed_segment.ball_indices(x, r)
        b = idx2.ball_indices(2.0 * x, 2.0 * r)
        assert np.array_equal(a, b)


def test_knn_distance(indexed_segment):
    m = indexed_segment.measure
    step = 1.0 / 2000.0
    x = m.points[500] + np.array([0.2 * step, 0.0])
    assert indexed_segment.knn_distance(x) == pytest.approx(0.2 * step)
    assert indexed_segment.knn_distance(x, k=2) == pytest.approx(0.8 * step)
    with pytest.raises(ValueError):
        indexed_segment.knn_distance(x, k=0)


@pytest.fixture(scope="module")
def line_index():
    m = make_measure(np.linspace(0, 1, 501)[:, None] * [1.0, 0.0], n=1)
    return SpatialIndex(m)


@given(st.floats(0.0, 2.0), st.floats(-0.5, 1.5))
def test_ball_mass_monotone_in_radius(line_index, r, x0):
    x = np.array([x0, 0.0])
    assert line_index.ball_mass(x, r) <= line_index.ball_mass(x, r + 0.1)


# ---------------------------------------------------------------------------
# regularity profile

def test_segment_profile_is_tight(indexed_segment):
    m = indexed_segment.measure
    interior = np.arange(400, 1601)
    prof = ad_regularity_profile(m, indexed_segment, [0.02, 0.05, 0.1],
                                 center_indices=interior)
    # interior line balls hold mass 2r, so ratios cluster at 2
    assert np.all(prof.min_ratio > 1.9)
    assert np.all(prof.max_ratio < 2.1)
    assert prof.c0_estimate < 2.1


def test_profile_flags_mass_concentration():
    pts = np.linspace(0.0, 1.0, 101)[:, None]
    w = np.ones(101)
    w[50] = 100.0
    m = make_measure(pts, w, n=1)
    idx = SpatialIndex(m)
    prof = ad_regularity_profile(m, idx, [0.05])
    assert prof.c0_estimate > 50.0


def test_profile_rejects_empty_inputs(indexed_segment):
    m = indexed_segment.measure
    with pytest.raises(ValueError):
        ad_regularity_profile(m, indexed_segment, [])
    with pytest.raises(ValueError):
        ad_regularity_profile(m, indexed_segment, [0.1], center_indices=[])


# ---------------------------------------------------------------------------
# boundary gauge

def test_gauge_distance_on_segment(segment_2001):
    gauge = BoundaryGauge(segment_2001)
    d = gauge.distance(segment_2001.points)
    ends = np.minimum(segment_2001.points[:, 0],
                      1.0 - segment_2001.points[:, 0])
    assert np.allclose(d, ends, atol=1e-12)


def test_gauge_ignores_dead_axes(segment_2001):
    # flat data must not report zero distance along the thin axis
    gauge = BoundaryGauge(segment_2001)
    mid = gauge.distance(np.array([0.5, 0.0]))
    assert mid == pytest.approx(0.5)


def test_gauge_batch_matches_single(circle_10000, rng):
    gauge = BoundaryGauge(circle_10000)
    xs = rng.normal(size=(10, 2))
    batch = gauge.distance(xs)
    for x, want in zip(xs, batch):
        assert gauge.distance(x) == pytest.approx(want)


# ---------------------------------------------------------------------------
# interchange

def test_csv_round_trip(tmp_path, cantor_k5):
    path = tmp_path / "m.csv"
    save_csv(path, cantor_k5)
    back = load_csv(path, n=cantor_k5.n, resolution=cantor_k5.resolution)
    assert np.array_equal(back.points, cantor_k5.points)
    assert np.array_equal(back.weights, cantor_k5.weights)


def test_csv_without_weights(tmp_path):
    path = tmp_path / "m.csv"
    m = make_measure(np.linspace(0, 2, 21)[:, None])
    save_csv(path, m, weights=False)
    assert path.read_text().splitlines()[0] == "x1"
    back = load_csv(path, n=1)
    assert back.total_mass() == pytest.approx(2.0)


def test_csv_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n0,1\n")
    with pytest.raises(ValueError):
        load_csv(path, n=1)
    path.write_text("")
    with pytest.raises(ValueError):
        load_csv(path, n=1)
