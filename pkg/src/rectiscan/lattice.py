"""Hierarchical net-based cube decomposition of a discrete measure.

Generation j is a maximal net of support points at separation ell_j =
2^-j * unit, grown greedily farthest-point-first and seeded with the
previous generation's centers so the nets are nested.  Points are
assigned once, at the finest generation, to the nearest net center
(ties to the lowest point index); coarser cubes are unions of their
children along the center-attachment tree.  This makes per-generation
partition and parent-child nesting exact by construction, at the price
of the member ball growing to roughly 2 ell(Q) instead of ell(Q).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .measure import DiscreteMeasure, SpatialIndex, _diameter

_BLOCK = 4096  # row block for distance matrices, bounds memory at O(_BLOCK * m)


@dataclass
class DavidCube:
    cube_id: int
    j: int
    center_index: int
    ell: float
    members: np.ndarray = field(repr=False)
    mass: float = 0.0
    parent: int = -1
    children: list = field(default_factory=list)

    def center(self, measure: DiscreteMeasure) -> np.ndarray:
        return measure.points[self.center_index]


@dataclass
class CubeLattice:
    measure: DiscreteMeasure
    unit: float
    jmax: int
    cubes: list                       # flat, indexed by cube_id
    generations: list                 # generations[j] = list of cube_ids
    assignment: np.ndarray            # (jmax+1, N) point -> cube_id

    def generation(self, j: int) -> list:
        return [self.cubes[i] for i in self.generations[j]]

    def cube_of(self, point_index: int, j: int) -> DavidCube:
        return self.cubes[self.assignment[j, point_index]]

    def descendants(self, cube: DavidCube) -> list:
        out, stack = [], [cube.cube_id]
        while stack:
            cid = stack.pop()
            out.append(cid)
            stack.extend(self.cubes[cid].children)
        return [self.cubes[i] for i in sorted(out)]

    def to_json(self) -> dict:
        return {
            "schema_version": 1,
            "unit": self.unit,
            "jmax": self.jmax,
            "point_count": int(self.measure.points.shape[0]),
            "cubes": [
                {
                    "id": c.cube_id,
                    "j": c.j,
                    "center_index": int(c.center_index),
                    "ell": c.ell,
                    "mass": c.mass,
                    "parent": c.parent,
                    "children": list(c.children),
                    "members": [int(i) for i in c.members],
                }
                for c in self.cubes
            ],
        }


def cube_ball(lattice: CubeLattice, cube: DavidCube):
    """Ball (center point, 10 ell(Q)) in which flatness of Q is measured."""
    return cube.center(lattice.measure), 10.0 * cube.ell


# ---------------------------------------------------------------------------
# construction


def build_lattice(measure: DiscreteMeasure, index: SpatialIndex | None,
                  jmax: int, unit: float | None = None) -> CubeLattice:
    if jmax < 0:
        raise ValueError("jmax must be >= 0")
    pts = measure.points
    diam = measure.diameter()
    if unit is None:
        unit = diam if diam > 0 else measure.resolution
    if not unit > 0:
        raise ValueError("unit must be positive")
    if diam > 0 and 2.0 ** (-jmax) * unit < measure.resolution:
        raise ValueError("jmax refines below the measure resolution")

    # nested nets, coarse to fine; kept sorted by point index so that
    # nearest-center argmin ties resolve to the lowest center index
    nets: list[np.ndarray] = []
    centers: np.ndarray = np.empty(0, dtype=np.intp)
    for j in range(jmax + 1):
        centers = np.sort(_grow_net(pts, centers, 2.0 ** (-j) * unit))
        nets.append(centers)

    cubes: list[DavidCube] = []
    generations: list[list[int]] = []
    for j, net in enumerate(nets):
        gen_ids = []
        for cidx in net:
            cube = DavidCube(cube_id=len(cubes), j=j, center_index=int(cidx),
                             ell=2.0 ** (-j) * unit, members=None)
            cubes.append(cube)
            gen_ids.append(cube.cube_id)
        generations.append(gen_ids)

    # children attach to the nearest parent center; exact distance ties
    # alternate round-robin so symmetric data cannot cascade all its mass
    # into one subtree
    for j in range(1, jmax + 1):
        att = _attach(pts[nets[j]], pts[nets[j - 1]])
        for pos, cid in enumerate(generations[j]):
            pid = generations[j - 1][att[pos]]
            cubes[cid].parent = pid
            cubes[pid].children.append(cid)

    # points are assigned at the finest generation only; coarser membership
    # follows the tree, so nesting and per-generation partition are exact
    owner_pos = _nearest_center(pts, pts[nets[jmax]])
    assignment = np.empty((jmax + 1, pts.shape[0]), dtype=np.intp)
    leaf_ids = np.asarray(generations[jmax], dtype=np.intp)
    assignment[jmax] = leaf_ids[owner_pos]
    anc = leaf_ids
    for j in range(jmax - 1, -1, -1):
        anc = np.array([cubes[c].parent for c in anc], dtype=np.intp)
        assignment[j] = anc[owner_pos]

    for j in range(jmax + 1):
        base = generations[j][0]
        members = _group(assignment[j] - base, len(generations[j]))
        for pos, cid in enumerate(generations[j]):
            cubes[cid].members = members[pos]
            cubes[cid].mass = float(measure.weights[members[pos]].sum())
    return CubeLattice(measure, float(unit), jmax, cubes, generations, assignment)


def _grow_net(pts: np.ndarray, seeds: np.ndarray, sep: float) -> np.ndarray:
    """Extend seeds to a maximal net: add the farthest point while it is
    more than sep away from every chosen center."""
    if seeds.size == 0:
        chosen = [0]
        dist = np.sqrt(((pts - pts[0]) ** 2).sum(axis=1))
    else:
        chosen = list(seeds)
        dist = np.full(pts.shape[0], np.inf)
        for c in chosen:
            np.minimum(dist, np.sqrt(((pts - pts[c]) ** 2).sum(axis=1)), out=dist)
    while True:
        far = int(np.argmax(dist))          # ties resolve to the lowest index
        if not dist[far] > sep:
            break
        chosen.append(far)
        np.minimum(dist, np.sqrt(((pts - pts[far]) ** 2).sum(axis=1)), out=dist)
    return np.asarray(chosen, dtype=np.intp)


def _nearest_center(pts: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Position of the nearest center per point.  Callers pass centers in
    ascending point-index order, so argmin's first-minimum rule is exactly
    the lowest-center-index tie-break."""
    out = np.empty(pts.shape[0], dtype=np.intp)
    for lo in range(0, pts.shape[0], _BLOCK):
        hi = min(lo + _BLOCK, pts.shape[0])
        d2 = ((pts[lo:hi, None, :] - centers[None, :, :]) ** 2).sum(-1)
        out[lo:hi] = np.argmin(d2, axis=1)
    return out


def _attach(children: np.ndarray, parents: np.ndarray) -> np.ndarray:
    """Nearest parent per child center, processed in ascending child order.

    Children whose minimal distance is attained by several parents (exact
    float ties, which dyadic-symmetric data produces in bulk) are handed
    out round-robin over the tied parents instead of always to the lowest
    index; a fixed direction would funnel every boundary subtree the same
    way and starve the other side of mass.
    """
    d2 = ((children[:, None, :] - parents[None, :, :]) ** 2).sum(-1)
    out = np.empty(children.shape[0], dtype=np.intp)
    rr = 0
    for i in range(children.shape[0]):
        row = d2[i]
        tied = np.flatnonzero(row == row.min())
        if tied.size == 1:
            out[i] = tied[0]
        else:
            out[i] = tied[rr % tied.size]
            rr += 1
    return out


def _group(owner_pos: np.ndarray, m: int) -> list[np.ndarray]:
    order = np.argsort(owner_pos, kind="stable")
    sorted_owner = owner_pos[order]
    bounds = np.searchsorted(sorted_owner, np.arange(m + 1))
    return [np.sort(order[bounds[i]:bounds[i + 1]]) for i in range(m)]


# ---------------------------------------------------------------------------
# audit


@dataclass(frozen=True)
class GenerationAudit:
    j: int
    cube_count: int
    mass_ratio_min: float
    mass_ratio_max: float
    diam_ratio_min: float
    diam_ratio_max: float
    sep_ratio_min: float
    flagged: bool


@dataclass(frozen=True)
class LatticeAudit:
    band: tuple
    rows: list
    ok: bool

    def to_json(self) -> dict:
        return {
            "schema_version": 1,
            "band": list(self.band),
            "ok": self.ok,
            "rows": [vars(r) for r in self.rows],
        }


def lattice_audit(lattice: CubeLattice, band=(1.0 / 16.0, 16.0)) -> LatticeAudit:
    """Per-generation regularity report.

    mass ratio = (mu(Q) / total mass) * 2^(j n): near 1 for an Ahlfors
    n-regular measure once scales are normalized by the point-set diameter.
    Generations whose mass ratios leave the band are flagged.
    """
    measure = lattice.measure
    total = measure.total_mass()
    n = measure.n
    rows = []
    ok = True
    for j, gen_ids in enumerate(lattice.generations):
        gen = [lattice.cubes[i] for i in gen_ids]
        mass_ratios = [c.mass / total * 2.0 ** (j * n) for c in gen]
        diam_ratios = [_diameter(measure.points[c.members]) / c.ell for c in gen]
        centers = measure.points[[c.center_index for c in gen]]
        if len(gen) > 1:
            diff = centers[:, None, :] - centers[None, :, :]
            dd = np.sqrt((diff ** 2).sum(-1))
            sep = float(dd[np.triu_indices(len(gen), 1)].min()) / (2.0 ** (-j) * lattice.unit)
        else:
            sep = np.inf
        flagged = min(mass_ratios) < band[0] or max(mass_ratios) > band[1]
        ok = ok and not flagged
        rows.append(GenerationAudit(
            j, len(gen), float(min(mass_ratios)), float(max(mass_ratios)),
            float(min(diam_ratios)), float(max(diam_ratios)), sep, flagged,
        ))
    return LatticeAudit(tuple(band), rows, ok)
