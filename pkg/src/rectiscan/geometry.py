"""Flatness coefficients of a measure restricted to a ball.

beta2 measures weighted L2 distance to the best affine n-plane, beta1 the
weighted L1 analogue via iteratively reweighted least squares, and alpha
the normalized flat distance between the measure and the best constant
multiple of n-dimensional area on a candidate plane.  The flat distance
itself is an exact linear program over witness values at the atoms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import coo_matrix

from .measure import DiscreteMeasure, SpatialIndex

MAX_LP_ATOMS = 2000
_IRLS_FLOOR = 1e-6      # relative floor for residual weights
_IRLS_TOL = 1e-10


@dataclass(frozen=True)
class PlaneFit:
    """Affine n-plane: a base point and n orthonormal direction rows.

    A degenerate fit (ball rank below n) zero-pads the missing rows and
    raises the flag; distances treat zero rows as contributing nothing.
    objective is the normalized fit value; kind names its norm.
    """
    point: np.ndarray
    basis: np.ndarray
    degenerate: bool = False
    objective: float = 0.0
    kind: str = "l2"

    def distances(self, pts: np.ndarray) -> np.ndarray:
        rel = pts - self.point
        tang = rel @ self.basis.T
        d2 = (rel ** 2).sum(axis=1) - (tang ** 2).sum(axis=1)
        return np.sqrt(np.maximum(d2, 0.0))


def _canonical_basis(basis: np.ndarray) -> np.ndarray:
    out = basis.copy()
    for i, row in enumerate(out):
        nz = np.abs(row).argmax()
        if row[nz] < 0:
            out[i] = -row
    return out


def _fit_plane(pts: np.ndarray, w: np.ndarray, n: int) -> PlaneFit:
    total = w.sum()
    centroid = (w[:, None] * pts).sum(axis=0) / total
    rel = pts - centroid
    cov = (w[:, None] * rel).T @ rel
    vals, vecs = np.linalg.eigh(cov)
    # stable descending sort: exact eigenvalue ties keep the lower column
    order = np.argsort(-vals, kind="stable")
    vals, vecs = vals[order], vecs[:, order]
    d = pts.shape[1]
    rank_tol = max(vals[0], 0.0) * 1e-13
    basis = np.zeros((n, d))
    degenerate = False
    for i in range(n):
        if i < d and vals[i] > rank_tol:
            basis[i] = vecs[:, i]
        else:
            degenerate = True
    return PlaneFit(centroid, _canonical_basis(basis), degenerate)


def beta2(measure: DiscreteMeasure, index: SpatialIndex, x, r: float):
    """(beta2 value, plane): sqrt of the weighted mean-square plane
    distance over B(x, r), normalized by r^(n+2)."""
    x = np.asarray(x, dtype=float)
    if not r > 0:
        raise ValueError("r must be positive")
    idx = index.ball_indices(x, r)
    if idx.size == 0:
        raise ValueError("empty ball")
    pts = measure.points[idx]
    w = measure.weights[idx]
    fit = _fit_plane(pts, w, measure.n)
    dist = fit.distances(pts)
    value = math.sqrt(float((w * dist ** 2).sum()) / r ** (measure.n + 2))
    return value, replace(fit, objective=value, kind="l2")


def beta1(measure: DiscreteMeasure, index: SpatialIndex, x, r: float,
          max_iters: int = 50):
    """(beta1 value, plane): weighted mean plane distance over B(x, r)
    normalized by r^(n+1), minimized by IRLS from the beta2 plane.

    Keeps the best iterate, so the result never exceeds the initialization.
    """
    x = np.asarray(x, dtype=float)
    if not r > 0:
        raise ValueError("r must be positive")
    idx = index.ball_indices(x, r)
    if idx.size == 0:
        raise ValueError("empty ball")
    pts = measure.points[idx]
    w = measure.weights[idx]
    n = measure.n
    norm = r ** (n + 1)

    fit = _fit_plane(pts, w, n)
    best_fit = fit
    best = float((w * fit.distances(pts)).sum()) / norm
    prev = best
    for _ in range(max_iters):
        resid = np.maximum(fit.distances(pts), _IRLS_FLOOR * r)
        fit = _fit_plane(pts, w / resid, n)
        obj = float((w * fit.distances(pts)).sum()) / norm
        if obj < best:
            best, best_fit = obj, fit
        if prev - obj < _IRLS_TOL:
            break
        prev = obj
    return best, replace(best_fit, objective=best, kind="l1")


# ---------------------------------------------------------------------------
# flat distance


def flat_norm_distance(pts_a, mass_a, pts_b, mass_b, center, radius: float):
    """sup { sum f d(mu_a - mu_b) : Lip(f) <= 1, supp f in B(center, radius) }.

    Exact for atomic measures: a witness restricted to the atoms extends to
    a 1-Lipschitz function vanishing off the ball iff it satisfies the
    pairwise bounds and |f(p)| <= dist(p, boundary), so the LP optimum is
    the true flat distance between the ball restrictions.
    """
    center = np.asarray(center, dtype=float)
    pts = np.concatenate([np.atleast_2d(pts_a), np.atleast_2d(pts_b)], axis=0)
    masses = np.concatenate([np.asarray(mass_a, dtype=float),
                             -np.asarray(mass_b, dtype=float)])
    dist_c = np.sqrt(((pts - center) ** 2).sum(axis=1))
    keep = dist_c <= radius
    pts, masses, dist_c = pts[keep], masses[keep], dist_c[keep]
    m = pts.shape[0]
    if m == 0:
        return 0.0, np.zeros(0)
    if m > MAX_LP_ATOMS:
        raise ValueError(f"flat distance LP capped at {MAX_LP_ATOMS} atoms, got {m}")
    bound = radius - dist_c

    iu, ju = np.triu_indices(m, k=1)
    gap = np.sqrt(((pts[iu] - pts[ju]) ** 2).sum(axis=1))
    rows = np.arange(iu.size)
    data = np.concatenate([np.ones(iu.size), -np.ones(iu.size),
                           -np.ones(iu.size), np.ones(iu.size)])
    rr = np.concatenate([rows, rows, rows + iu.size, rows + iu.size])
    cc = np.concatenate([iu, ju, iu, ju])
    A = coo_matrix((data, (rr, cc)), shape=(2 * iu.size, m))
    b = np.concatenate([gap, gap])

    res = linprog(-masses, A_ub=A.tocsr(), b_ub=b,
                  bounds=list(zip(-bound, bound)), method="highs")
    if not res.success:
        raise RuntimeError(f"flat distance LP failed: {res.message}")
    return float(-res.fun), res.x


# ---------------------------------------------------------------------------
# alpha coefficients


@dataclass(frozen=True)
class AlphaParams:
    """Search budget for the (c, plane) minimization inside alpha."""
    angle_steps: int = 3          # magnitudes per sign, plus the unrotated plane
    offset_steps: int = 2         # magnitudes per sign, plus the centered plane
    grid_pitch_frac: float = 1.0 / 40.0
    atom_budget: int = 120
    c_iters: int = 16
    seed: int = 0


LIGHT_ALPHA = AlphaParams(angle_steps=1, offset_steps=1,
                          grid_pitch_frac=1.0 / 20.0, atom_budget=70,
                          c_iters=10)


@dataclass(frozen=True)
class AlphaResult:
    value: float
    c: float
    plane: PlaneFit
    atoms_used: int
    candidates: int


def _plane_candidates(fit: PlaneFit, beta_scale: float, r: float, d: int,
                      params: AlphaParams):
    """Rotate the fitted plane toward its normal complement and slide it
    along the normals; magnitudes scale with the observed beta1 level."""
    yield fit
    if fit.degenerate:
        return
    normals = _normal_complement(fit.basis, d)
    if normals.shape[0] == 0:
        return
    dtheta = max(beta_scale, 1e-3)
    # offsets capped below r/2 so every candidate still meets the half ball
    dshift = min(max(beta_scale, 1e-3), 0.45) * r
    for axis in range(fit.basis.shape[0]):
        for nrm in normals:
            for step in range(1, params.angle_steps + 1):
                ang = dtheta * step / params.angle_steps
                for sgn in (1.0, -1.0):
                    basis = fit.basis.copy()
                    basis[axis] = math.cos(ang) * fit.basis[axis] + sgn * math.sin(ang) * nrm
                    yield replace(fit, basis=_canonical_basis(_orthonormalize(basis)))
    for nrm in normals:
        for step in range(1, params.offset_steps + 1):
            shift = dshift * step / params.offset_steps
            for sgn in (1.0, -1.0):
                yield replace(fit, point=fit.point + sgn * shift * nrm)


def _normal_complement(basis: np.ndarray, d: int) -> np.ndarray:
    proj = np.eye(d) - basis.T @ basis
    q, s, _ = np.linalg.svd(proj)
    return q[:, s > 1e-10].T


def _orthonormalize(basis: np.ndarray) -> np.ndarray:
    q, _ = np.linalg.qr(basis.T)
    return q.T[: basis.shape[0]]


def _plane_grid(fit: PlaneFit, center: np.ndarray, r: float, pitch: float,
                n: int, rng: np.random.Generator, budget: int):
    """Discretize the plane inside 1.5 B(center, r) at the given pitch;
    each node carries the H^n mass pitch^n of its cell."""
    rel = center - fit.point
    anchor = fit.point + (rel @ fit.basis.T) @ fit.basis
    span = 1.5 * r
    steps = np.arange(-span, span + pitch / 2, pitch)
    if n == 1:
        offsets = steps[:, None] * fit.basis[0][None, :]
    elif n == 2:
        u, v = np.meshgrid(steps, steps, indexing="ij")
        offsets = (u.ravel()[:, None] * fit.basis[0][None, :]
                   + v.ravel()[:, None] * fit.basis[1][None, :])
    else:
        raise ValueError("alpha grids implemented for n in {1, 2}")
    nodes = anchor[None, :] + offsets
    inside = np.sqrt(((nodes - center) ** 2).sum(axis=1)) <= 1.5 * r
    nodes = nodes[inside]
    masses = np.full(nodes.shape[0], pitch ** n)
    if nodes.shape[0] > budget:
        pick = np.sort(rng.choice(nodes.shape[0], size=budget, replace=False))
        scale = nodes.shape[0] / budget
        nodes, masses = nodes[pick], masses[pick] * scale
    return nodes, masses


def alpha_coeff(measure: DiscreteMeasure, index: SpatialIndex, x, r: float,
                params: AlphaParams = AlphaParams()) -> AlphaResult:
    """Normalized flat distance from mu on B(x, r) to the nearest c * area
    on a plane: inf over candidate planes and c >= 0, divided by r^(n+1).
    """
    x = np.asarray(x, dtype=float)
    if not r > 0:
        raise ValueError("r must be positive")
    idx = index.ball_indices(x, r)
    if idx.size == 0:
        raise ValueError("empty ball")
    n = measure.n
    rng = np.random.default_rng(params.seed)

    mu_pts = measure.points[idx]
    mu_w = measure.weights[idx]
    ball_mass = float(mu_w.sum())
    if idx.size > params.atom_budget:
        # mass-preserving subsample: equal-probability-by-mass draws
        p = mu_w / ball_mass
        pick = np.sort(rng.choice(idx.size, size=params.atom_budget, replace=True, p=p))
        mu_pts = mu_pts[pick]
        mu_w = np.full(params.atom_budget, ball_mass / params.atom_budget)

    beta_val, fit = beta1(measure, index, x, r)
    beta_scale = beta_val * r ** n / max(ball_mass / r ** n, 1e-12)

    pitch = params.grid_pitch_frac * r
    c_hi = 2.0 * ball_mass / r ** n
    best = (math.inf, 0.0, fit)
    count = 0
    for cand in _plane_candidates(fit, beta_scale, r, measure.d, params):
        count += 1
        nodes, node_mass = _plane_grid(cand, x, r, pitch, n, rng, params.atom_budget)
        if nodes.shape[0] == 0:
            continue

        def dist_of(c):
            val, _ = flat_norm_distance(mu_pts, mu_w, nodes, c * node_mass, x, r)
            return val

        c, val = _golden_min(dist_of, 0.0, c_hi, params.c_iters)
        if val < best[0]:
            best = (val, c, cand)
    value = best[0] / r ** (n + 1)
    return AlphaResult(float(value), float(best[1]), best[2], mu_pts.shape[0], count)


def _golden_min(f, lo: float, hi: float, iters: int):
    """Golden-section minimum of a convex scalar function on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    if fc <= fd:
        return c, fc
    return d, fd


# ---------------------------------------------------------------------------
# packing audit


@dataclass(frozen=True)
class PackingRow:
    cube_id: int
    j: int
    radius: float
    alpha: float
    mass: float


@dataclass(frozen=True)
class PackingAudit:
    root_id: int
    root_mass: float
    rows: list
    cumulative: dict        # depth -> sum alpha^2 mass / root mass

    def ratio(self, depth: int) -> float:
        return self.cumulative[depth]


def alpha_packing_audit(measure: DiscreteMeasure, index: SpatialIndex,
                        lattice, root, depth: int,
                        params: AlphaParams = LIGHT_ALPHA) -> PackingAudit:
    """alpha^2-weighted mass of the subtree below a root cube, depth by
    depth: flat rectifiable data keeps the cumulative ratio small, while
    self-similar unrectifiable data grows it linearly with depth."""
    from .lattice import cube_ball

    rows = []
    for cube in lattice.descendants(root):
        if cube.j - root.j > depth:
            continue
        center, radius = cube_ball(lattice, cube)
        res = alpha_coeff(measure, index, center, radius, params)
        rows.append(PackingRow(cube.cube_id, cube.j, radius, res.value, cube.mass))
    cumulative = {}
    for dd in range(depth + 1):
        s = sum(row.alpha ** 2 * row.mass for row in rows if row.j - root.j <= dd)
        cumulative[dd] = s / root.mass
    return PackingAudit(root.cube_id, root.mass, rows, cumulative)
