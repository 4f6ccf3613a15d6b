"""Net-based cube decomposition invariants."""

import numpy as np
import pytest

from rectiscan import SpatialIndex, build_lattice, cube_ball, lattice_audit


@pytest.fixture(scope="module")
def segment_lattice(segment_2001):
    return build_lattice(segment_2001, SpatialIndex(segment_2001), jmax=6)


@pytest.fixture(scope="module")
def cantor_lattice(cantor_k5):
    # unit = diameter keeps generation scales 4-adically aligned enough
    return build_lattice(cantor_k5, None, jmax=5)


def test_generations_partition_the_points(segment_lattice):
    n_pts = segment_lattice.measure.points.shape[0]
    for j in range(segment_lattice.jmax + 1):
        member_lists = [c.members for c in segment_lattice.generation(j)]
        allm = np.concatenate(member_lists)
        assert allm.size == n_pts
        assert np.array_equal(np.sort(allm), np.arange(n_pts))


def test_masses_add_up(segment_lattice):
    m = segment_lattice.measure
    for j in range(segment_lattice.jmax + 1):
        gen = segment_lattice.generation(j)
        for c in gen:
            assert c.mass == pytest.approx(float(m.weights[c.members].sum()))
        assert sum(c.mass for c in gen) == pytest.approx(m.total_mass())


def test_children_tile_their_parent(segment_lattice):
    for j in range(segment_lattice.jmax):
        for c in segment_lattice.generation(j):
            got = np.sort(np.concatenate(
                [segment_lattice.cubes[i].members for i in c.children]))
            assert np.array_equal(got, np.sort(c.members))


def test_roots_have_no_parent(segment_lattice):
    for c in segment_lattice.generation(0):
        assert c.parent == -1
    for j in range(1, segment_lattice.jmax + 1):
        for c in segment_lattice.generation(j):
            assert segment_lattice.cubes[c.parent].j == j - 1


def test_assignment_is_consistent(segment_lattice):
    rng = np.random.default_rng(7)
    for i in rng.integers(0, 2001, size=40):
        for j in (0, 3, 6):
            cube = segment_lattice.cube_of(int(i), j)
            assert int(i) in cube.members
            assert cube.j == j


def test_nets_are_nested_and_separated(segment_lattice):
    pts = segment_lattice.measure.points
    prev: set = set()
    for j in range(segment_lattice.jmax + 1):
        gen = segment_lattice.generation(j)
        idx = {c.center_index for c in gen}
        assert prev <= idx
        prev = idx
        centers = pts[sorted(idx)]
        if len(gen) > 1:
            diff = centers[:, None, :] - centers[None, :, :]
            dd = np.sqrt((diff ** 2).sum(-1))
            sep = dd[np.triu_indices(len(gen), 1)].min()
            assert sep > 2.0 ** (-j) * segment_lattice.unit


def test_net_is_maximal(segment_lattice):
    # every point sits within ell_j of some generation-j center
    pts = segment_lattice.measure.points
    for j in (0, 2, 5):
        centers = pts[[c.center_index for c in segment_lattice.generation(j)]]
        diff = pts[:, None, :] - centers[None, :, :]
        nearest = np.sqrt((diff ** 2).sum(-1)).min(axis=1)
        assert nearest.max() <= 2.0 ** (-j) * segment_lattice.unit + 1e-12


def test_members_stay_near_their_center(segment_lattice):
    m = segment_lattice.measure
    for j in range(segment_lattice.jmax + 1):
        for c in segment_lattice.generation(j):
            d = np.sqrt(((m.points[c.members] - c.center(m)) ** 2).sum(-1))
            # attachment chains stretch the member ball past ell(Q), but
            # the geometric sum keeps it under 3 ell(Q)
            assert d.max() <= 3.0 * c.ell


def test_descendants_cover_subtree(segment_lattice):
    root = max(segment_lattice.generation(0), key=lambda c: c.mass)
    desc = segment_lattice.descendants(root)
    assert [c.cube_id for c in desc] == sorted(c.cube_id for c in desc)
    assert root.cube_id in [c.cube_id for c in desc]
    leaves = [c for c in desc if c.j == segment_lattice.jmax]
    assert sum(c.mass for c in leaves) == pytest.approx(root.mass)


def test_cube_ball_radius(segment_lattice):
    cube = segment_lattice.generation(2)[0]
    center, r = cube_ball(segment_lattice, cube)
    assert np.array_equal(center, cube.center(segment_lattice.measure))
    assert r == pytest.approx(10.0 * cube.ell)


def test_lattice_serialization(cantor_lattice):
    blob = cantor_lattice.to_json()
    assert blob["schema_version"] == 1
    assert blob["jmax"] == 5
    assert len(blob["cubes"]) == len(cantor_lattice.cubes)
    assert blob["cubes"][0]["parent"] == -1


def test_build_rejects_bad_arguments(segment_2001):
    with pytest.raises(ValueError):
        build_lattice(segment_2001, None, jmax=-1)
    with pytest.raises(ValueError):
        build_lattice(segment_2001, None, jmax=3, unit=0.0)
    with pytest.raises(ValueError):
        # 2^-20 refines far below the sample spacing
        build_lattice(segment_2001, None, jmax=20)


def test_audit_accepts_regular_data(segment_lattice):
    audit = lattice_audit(segment_lattice)
    assert audit.ok
    assert len(audit.rows) == segment_lattice.jmax + 1
    for row in audit.rows:
        assert not row.flagged
        assert row.sep_ratio_min > 1.0
        assert row.mass_ratio_min > 1.0 / 16.0
        assert row.mass_ratio_max < 16.0
    blob = audit.to_json()
    assert blob["ok"] and len(blob["rows"]) == len(audit.rows)


def test_audit_flags_tight_band(segment_lattice):
    audit = lattice_audit(segment_lattice, band=(0.999, 1.001))
    assert not audit.ok
    assert any(r.flagged for r in audit.rows)


def test_cantor_lattice_tracks_branching(cantor_lattice):
    # 4-adic cloud: two net scales per construction level, cube counts
    # interleave powers of 2 between the exact powers of 4
    counts = [len(g) for g in cantor_lattice.generations]
    assert counts[0] == 1
    assert all(b >= a for a, b in zip(counts, counts[1:]))
    audit = lattice_audit(cantor_lattice)
    assert audit.ok
