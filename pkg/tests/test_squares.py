"""Multiscale density functionals, coefficient fields, ball aggregation."""

import math

import numpy as np
import pytest
from scipy import integrate

from rectiscan import (DiscreteMeasure, Functional, SpatialIndex,
                       carleson_norm, coefficient_field, delta_density,
                       delta_k, delta_smooth, delta_smooth_dt,
                       geometric_scales, parse_kernel)

GAUSS = parse_kernel("gauss:N=1", 1)


@pytest.fixture(scope="module")
def two_atoms():
    # isolated atoms: every functional reduces to a closed form at atom 0
    pts = np.array([[0.0, 0.0], [100.0, 0.0]])
    m = DiscreteMeasure(pts, np.array([3.0, 5.0]), 1, 0.5)
    return m, SpatialIndex(m)


def test_density_difference_closed_form(two_atoms):
    m, idx = two_atoms
    x = np.zeros(2)
    # only the near atom inside both balls
    assert delta_density(m, idx, x, 1.0) == pytest.approx(3.0 - 3.0 / 2.0)
    # doubled ball reaches the far atom
    assert delta_density(m, idx, x, 60.0) == pytest.approx(
        3.0 / 60.0 - 8.0 / 120.0)


def test_density_scale_range_enforced(two_atoms):
    m, idx = two_atoms
    with pytest.raises(ValueError):
        delta_density(m, idx, np.zeros(2), 0.4)
    with pytest.raises(ValueError):
        delta_density(m, idx, np.zeros(2), 101.0)


def test_smooth_difference_atom_value(two_atoms):
    m, idx = two_atoms
    x = np.zeros(2)
    for t in (0.5, 1.0, 2.0):
        # phi_t(0) = t^-n, so the first difference leaves (1 - 2^-n) t^-n
        assert delta_smooth(m, idx, GAUSS, x, t) == pytest.approx(
            3.0 * 0.5 / t, rel=1e-12)


def test_scale_derivative_atom_value(two_atoms):
    m, idx = two_atoms
    x = np.zeros(2)
    for t in (0.5, 1.5):
        assert delta_smooth_dt(m, idx, GAUSS, x, t) == pytest.approx(
            -3.0 / t, rel=1e-12)


def test_second_difference_atom_value(two_atoms):
    m, idx = two_atoms
    got = delta_k(m, idx, GAUSS, np.zeros(2), 1.0, 2)
    assert got == pytest.approx(3.0 * (1.0 - 2.0 * 0.5 + 0.25), rel=1e-12)


def test_first_octave_ladder_is_the_smooth_difference(indexed_circle, rng):
    m = indexed_circle.measure
    spec = parse_kernel("gauss:N=1", 1)
    for _ in range(10):
        x = m.points[rng.integers(0, m.points.shape[0])]
        t = float(rng.uniform(0.05, 0.3))
        a = delta_k(m, indexed_circle, spec, x, t, 1, discrete=True)
        b = delta_smooth(m, indexed_circle, spec, x, t)
        assert a == b
        c = delta_k(m, indexed_circle, spec, x, t, 1, discrete=False)
        d = delta_smooth_dt(m, indexed_circle, spec, x, t)
        assert c == d


def test_smooth_difference_matches_circle_quadrature(indexed_circle):
    # periodic trapezoid oracle: chord(theta) = 2 sin(theta/2) on the
    # unit circle, spectrally accurate for smooth integrands
    m = indexed_circle.measure
    x = np.array([1.0, 0.0])
    for t in (0.2, 0.45):
        f = lambda th: (math.exp(-(2 * math.sin(th / 2)) ** 2 / t ** 2) / t
                        - math.exp(-(2 * math.sin(th / 2)) ** 2 / (2 * t) ** 2)
                        / (2 * t))
        want, err = integrate.quad(f, -math.pi, math.pi, limit=400,
                                   epsabs=1e-12, epsrel=1e-12)
        assert err < 1e-10
        got = delta_smooth(m, indexed_circle, GAUSS, x, t)
        assert got == pytest.approx(want, rel=1e-7)


def test_density_difference_matches_arc_masses(indexed_circle):
    m = indexed_circle.measure
    x = np.array([1.0, 0.0])
    spacing = 2 * math.pi / 10000
    for r in (0.1, 0.3, 0.6):
        want = 4 * math.asin(r / 2) / r - 4 * math.asin(r) / (2 * r)
        got = delta_density(m, indexed_circle, x, r)
        assert abs(got - want) <= 3 * spacing / r


def test_functional_validation():
    with pytest.raises(ValueError, match="unknown functional"):
        Functional("delta-cubed")
    with pytest.raises(ValueError, match="smooth kernel"):
        Functional("delta-smooth")
    with pytest.raises(ValueError, match="no kernel"):
        Functional("delta-density", GAUSS)
    with pytest.raises(ValueError, match="k must be"):
        Functional("delta-smooth-k", GAUSS, 7)
    assert str(Functional("delta-smooth-k", GAUSS, 2)) == \
        "delta-smooth-k|gauss:N=1|k=2"


def test_geometric_scales_grid():
    assert np.allclose(geometric_scales(0.1, 0.9),
                       [0.1, 0.2, 0.4, 0.8])
    # inclusive when hi is an exact power times lo
    assert geometric_scales(0.1, 0.4).size == 3
    with pytest.raises(ValueError):
        geometric_scales(0.0, 1.0)
    with pytest.raises(ValueError):
        geometric_scales(0.1, 1.0, ratio=1.0)


# ---------------------------------------------------------------------------
# coefficient fields


def test_field_shape_and_flags(indexed_segment):
    m = indexed_segment.measure
    centers = np.array([0, 1000, 2000])
    scales = np.array([0.01, 0.04, 0.16])
    field = coefficient_field(m, indexed_segment, Functional("delta-density"),
                              scales, center_indices=centers)
    assert field.values.shape == (3, 3)
    assert np.array_equal(field.center_indices, centers)
    flags = field.flags()
    # endpoints sit on the boundary: flagged at every scale
    assert flags[0].all() and flags[2].all()
    # the midpoint is half a unit from the edge, safe at every scale here
    assert not flags[1].any()
    assert field.poisoned == ()


def test_field_poisons_out_of_range_cells(indexed_segment):
    m = indexed_segment.measure
    bad = 0.5 * m.resolution
    field = coefficient_field(m, indexed_segment, Functional("delta-density"),
                              [bad, 0.05], center_indices=[1000])
    assert math.isnan(field.values[0, 0])
    assert math.isfinite(field.values[0, 1])
    assert len(field.poisoned) == 1
    assert field.poisoned[0][:2] == (0, 0)


def test_field_subsampling_preserves_mass(indexed_circle):
    m = indexed_circle.measure
    field = coefficient_field(m, indexed_circle, Functional("delta-density"),
                              [0.1], max_centers=500, seed=2)
    assert field.center_indices.size == 500
    assert np.all(np.diff(field.center_indices) >= 0)
    assert field.include_weights.sum() == pytest.approx(m.total_mass())
    again = coefficient_field(m, indexed_circle, Functional("delta-density"),
                              [0.1], max_centers=500, seed=2)
    assert np.array_equal(field.center_indices, again.center_indices)


def test_field_thread_determinism(indexed_segment):
    m = indexed_segment.measure
    spec = parse_kernel("gauss:N=1", 1)
    kwargs = dict(scales=[0.02, 0.08], center_indices=np.arange(0, 2001, 100))
    one = coefficient_field(m, indexed_segment,
                            Functional("delta-smooth", spec), threads=1, **kwargs)
    two = coefficient_field(m, indexed_segment,
                            Functional("delta-smooth", spec), threads=4, **kwargs)
    assert np.array_equal(one.values, two.values)


def test_field_csv_layout(tmp_path, indexed_segment):
    m = indexed_segment.measure
    field = coefficient_field(m, indexed_segment, Functional("delta-density"),
                              [0.02, 0.08], center_indices=[10, 20])
    path = tmp_path / "field.csv"
    field.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "center_index,r,value"
    assert len(lines) == 1 + 4


def test_field_rejects_bad_scale_grid(indexed_segment):
    m = indexed_segment.measure
    with pytest.raises(ValueError):
        coefficient_field(m, indexed_segment, Functional("delta-density"),
                          [0.1, 0.05])
    with pytest.raises(ValueError):
        coefficient_field(m, indexed_segment, Functional("delta-density"), [])


# ---------------------------------------------------------------------------
# ball aggregation


@pytest.fixture(scope="module")
def segment_field(indexed_segment):
    m = indexed_segment.measure
    scales = geometric_scales(0.01, 0.16)
    return coefficient_field(m, indexed_segment, Functional("delta-density"),
                             scales)


def test_carleson_value_matches_direct_sum(segment_field, indexed_segment):
    m = indexed_segment.measure
    ball = (np.array([0.5, 0.0]), 0.16)
    report = carleson_norm(segment_field, m, [ball], exclude_flagged=False)
    row = report.rows[0]
    centers = m.points[segment_field.center_indices]
    inside = np.sqrt(((centers - ball[0]) ** 2).sum(1)) <= ball[1]
    # every scale participates; log-midpoint steps are log 2 on this grid
    want = float((segment_field.values[inside] ** 2
                  * segment_field.include_weights[inside, None]
                  * math.log(2.0)).sum()) / ball[1]
    assert row.value == pytest.approx(want, rel=1e-12)
    assert row.cells == int(inside.sum()) * segment_field.scales.size
    assert row.octaves == pytest.approx(4.0)


def test_carleson_excludes_flagged_cells(segment_field, indexed_segment):
    m = indexed_segment.measure
    ball = (np.array([0.02, 0.0]), 0.16)
    keep = carleson_norm(segment_field, m, [ball], exclude_flagged=False)
    drop = carleson_norm(segment_field, m, [ball], exclude_flagged=True)
    assert drop.rows[0].cells < keep.rows[0].cells
    assert drop.rows[0].value <= keep.rows[0].value + 1e-15
    assert keep.rows[0].flagged > 0


def test_carleson_skips_empty_and_validates_radius(segment_field,
                                                   indexed_segment):
    m = indexed_segment.measure
    report = carleson_norm(segment_field, m, [(np.array([50.0, 0.0]), 0.1)])
    assert report.rows == ()
    assert len(report.skipped) == 1
    with pytest.raises(ValueError, match="scale span"):
        carleson_norm(segment_field, m, [(np.array([0.5, 0.0]), 1.0)])


def test_carleson_slope_on_growing_balls(segment_field, indexed_segment):
    m = indexed_segment.measure
    balls = [(np.array([0.5, 0.0]), r) for r in (0.02, 0.04, 0.08, 0.16)]
    report = carleson_norm(segment_field, m, balls)
    assert len(report.rows) == 4
    assert report.sup_value == pytest.approx(
        max(r.value for r in report.rows))
    blob = report.to_json()
    assert blob["schema_version"] == 1
    assert len(blob["rows"]) == 4
