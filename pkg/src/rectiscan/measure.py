"""Weighted point measures with spatial queries.

A discrete measure is a finite set of weighted points in R^d standing in
for an n-dimensional measure (n <= d).  All ball queries use closed balls,
and every weighted sum over a ball accumulates in ascending index order so
that indexed and brute-force code paths agree bit for bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finite weighted point set in R^d modelling an n-dimensional measure.

    points     : (N, d) float array
    weights    : (N,) strictly positive float array
    n          : intrinsic dimension the measure is compared against
    resolution : smallest scale at which queries are meaningful
    """

    points: np.ndarray
    weights: np.ndarray
    n: int
    resolution: float

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ValueError("points must be a nonempty (N, d) array")
        if w.shape != (pts.shape[0],):
            raise ValueError("weights must match the number of points")
        if not np.all(np.isfinite(pts)) or not np.all(np.isfinite(w)):
            raise ValueError("points and weights must be finite")
        if np.any(w <= 0):
            raise ValueError("weights must be strictly positive")
        if not (0 < self.n <= pts.shape[1]):
            raise ValueError("need 0 < n <= d")
        if not (self.resolution > 0):
            raise ValueError("resolution must be positive")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)
        if pts.shape[0] >= 2 and self.resolution > self.diameter():
            raise ValueError("resolution exceeds the point-set diameter")

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def total_mass(self) -> float:
        return float(self.weights.sum())

    def diameter(self) -> float:
        # max pairwise distance via the bounding-box corners would undershoot;
        # use the exact hull-free computation on coordinate extremes per axis
        # only as a lower bound, then refine over candidate extreme points.
        # Cached: the arrays are frozen, and scale-range checks call this per
        # query.
        cached = self.__dict__.get("_diam")
        if cached is None:
            cached = float(_diameter(self.points))
            object.__setattr__(self, "_diam", cached)
        return cached

    @classmethod
    def create(cls, points, weights=None, n: int = 1, resolution: float | None = None):
        """Build a measure, filling in default weights and resolution.

        Missing weights are uniform and normalized so the total mass equals
        diameter**n.  Missing resolution defaults to 3x the smallest
        positive pairwise spacing.
        """
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ValueError("points must be a nonempty (N, d) array")
        if weights is None:
            diam = _diameter(pts)
            total = diam ** n if diam > 0 else 1.0
            weights = np.full(pts.shape[0], total / pts.shape[0])
        if resolution is None:
            spacing = _min_positive_spacing(pts)
            if spacing is None:
                raise ValueError("cannot infer a resolution for a single point")
            resolution = 3.0 * spacing
        return cls(pts, np.asarray(weights, dtype=float), n, float(resolution))


def _diameter(pts: np.ndarray) -> float:
    if pts.shape[0] == 1:
        return 0.0
    # exact diameter on the convex-position candidates: points extreme in
    # coordinate and diagonal directions; falls back to all points when small
    if pts.shape[0] <= 2048:
        cand = pts
    else:
        dirs = _probe_directions(pts.shape[1])
        proj = pts @ dirs.T
        idx = np.unique(np.concatenate([proj.argmin(axis=0), proj.argmax(axis=0)]))
        cand = pts[idx]
    diff = cand[:, None, :] - cand[None, :, :]
    return float(np.sqrt((diff ** 2).sum(-1)).max())


def _probe_directions(d: int) -> np.ndarray:
    dirs = [np.eye(d)[i] for i in range(d)]
    for i in range(d):
        for j in range(i + 1, d):
            v = np.zeros(d)
            v[i] = v[j] = 1.0
            dirs.append(v / math.sqrt(2))
            v = np.zeros(d)
            v[i], v[j] = 1.0, -1.0
            dirs.append(v / math.sqrt(2))
    return np.array(dirs)


def _min_positive_spacing(pts: np.ndarray):
    if pts.shape[0] < 2:
        return None
    tree = cKDTree(pts)
    k = min(pts.shape[0], 8)
    dist, _ = tree.query(pts, k=k)
    pos = dist[:, 1:][dist[:, 1:] > 0]
    if pos.size:
        return float(pos.min())
    return None


def min_spacing(measure: DiscreteMeasure) -> float:
    """Minimum pairwise distance; 0.0 when duplicate points are present."""
    pts = measure.points
    if pts.shape[0] < 2:
        raise ValueError("min_spacing needs at least two points")
    dist, _ = cKDTree(pts).query(pts, k=2)
    return float(dist[:, 1].min())


# ---------------------------------------------------------------------------
# spatial index


class SpatialIndex:
    """KD-tree over a measure's points with deterministic weighted sums.

    Every path that sums weights over a ball gathers the member indices in
    ascending order first, so results do not depend on tree internals and
    the brute-force twin reproduces them exactly.
    """

    def __init__(self, measure: DiscreteMeasure):
        self.measure = measure
        self.tree = cKDTree(measure.points)
        # balls spanning a good fraction of the data beat the tree with a
        # dense scan, and the scan avoids materializing huge index lists
        self._dense_cut = 0.25 * float(np.sqrt((np.ptp(measure.points, axis=0) ** 2).sum()))

    def ball_indices(self, x, r: float) -> np.ndarray:
        """Ascending indices of points with |p - x| <= r (closed ball)."""
        if not (r >= 0) or not np.all(np.isfinite(x)):
            raise ValueError("need finite center and r >= 0")
        x = np.asarray(x, dtype=float)
        if r >= self._dense_cut:
            dist = np.sqrt(((self.measure.points - x) ** 2).sum(axis=1))
            return np.flatnonzero(dist <= r).astype(np.intp)
        idx = self.tree.query_ball_point(x, r, return_sorted=True)
        return np.asarray(idx, dtype=np.intp)

    def ball_mass(self, x, r: float) -> float:
        """Total weight of the closed ball B(x, r); 0.0 for an empty ball."""
        idx = self.ball_indices(x, r)
        if idx.size == 0:
            return 0.0
        return float(self.measure.weights[idx].sum())

    def ball_count(self, x, r: float) -> int:
        return int(self.ball_indices(x, r).size)

    def knn_distance(self, x, k: int = 1) -> float:
        """Distance from x to its k-th nearest point of the support."""
        if k < 1 or k > self.measure.points.shape[0]:
            raise ValueError("k out of range")
        dist, _ = self.tree.query(np.asarray(x, dtype=float), k=k)
        return float(np.atleast_1d(dist)[-1])


def ball_mass_brute(measure: DiscreteMeasure, x, r: float) -> float:
    """Reference ball mass: boolean mask, then the same ordered summation."""
    x = np.asarray(x, dtype=float)
    dist = np.sqrt(((measure.points - x) ** 2).sum(axis=1))
    sel = measure.weights[dist <= r]
    if sel.size == 0:
        return 0.0
    return float(sel.sum())


# ---------------------------------------------------------------------------
# regularity profile


@dataclass(frozen=True)
class AdProfile:
    """Ball-mass ratios mu(B(x, r)) / r^n across centers and scales.

    min_ratio/max_ratio are per-scale extremes over the sampled centers;
    c0_estimate = max over all sampled (x, r) of max(ratio, 1/ratio).
    """

    scales: np.ndarray
    min_ratio: np.ndarray
    max_ratio: np.ndarray
    c0_estimate: float
    center_indices: np.ndarray = field(repr=False, default=None)


def ad_regularity_profile(measure: DiscreteMeasure, index: SpatialIndex,
                          scales, center_indices=None) -> AdProfile:
    """Sample Ahlfors-regularity ratios over support points and scales."""
    scales = np.asarray(scales, dtype=float)
    if scales.size == 0 or np.any(scales <= 0):
        raise ValueError("scales must be positive and nonempty")
    if center_indices is None:
        center_indices = np.arange(measure.points.shape[0])
    center_indices = np.asarray(center_indices, dtype=np.intp)
    if center_indices.size == 0:
        raise ValueError("need at least one center")
    lo = np.empty(scales.size)
    hi = np.empty(scales.size)
    c0 = 1.0
    for j, r in enumerate(scales):
        ratios = np.array([index.ball_mass(measure.points[i], r) / r ** measure.n
                           for i in center_indices])
        # centers sit on the support, so each closed ball holds its center
        lo[j], hi[j] = ratios.min(), ratios.max()
        c0 = max(c0, hi[j], 1.0 / lo[j] if lo[j] > 0 else math.inf)
    return AdProfile(scales, lo, hi, float(c0), center_indices)


# ---------------------------------------------------------------------------
# interior/boundary bookkeeping


class BoundaryGauge:
    """Distance to the boundary of the data's principal bounding box.

    Cheap stand-in for distance to the convex hull boundary: project onto
    the principal axes of the point cloud once, then measure the smallest
    slack to a face of the axis-aligned box in that frame.
    """

    def __init__(self, measure: DiscreteMeasure):
        pts = measure.points
        mean = pts.mean(axis=0)
        cov = (pts - mean).T @ (pts - mean)
        _, vecs = np.linalg.eigh(cov)
        self.frame = vecs
        proj = pts @ vecs
        self.lo = proj.min(axis=0)
        self.hi = proj.max(axis=0)
        # flat data: axes the cloud does not extend along carry no boundary
        extent = self.hi - self.lo
        self.live = extent > max(extent.max(), measure.resolution) * 1e-9
        if not self.live.any():
            self.live = np.ones_like(self.live, dtype=bool)

    def distance(self, x) -> np.ndarray:
        """Boundary distance for one point (d,) or a batch (m, d)."""
        proj = np.asarray(x, dtype=float) @ self.frame
        slack = np.minimum(proj - self.lo, self.hi - proj)
        return slack[..., self.live].min(axis=-1)


# ---------------------------------------------------------------------------
# CSV interchange


def load_csv(path, n: int, resolution: float | None = None) -> DiscreteMeasure:
    """Read `x1,...,xd[,w]` rows.  Without a weight column the weights are
    uniform and normalized so the total mass equals diameter**n."""
    with open(path) as fh:
        header = fh.readline().strip()
        if not header:
            raise ValueError(f"{path}: empty file")
        cols = [c.strip() for c in header.split(",")]
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    has_w = cols[-1] == "w"
    d = len(cols) - (1 if has_w else 0)
    if d < 1 or cols[:d] != [f"x{i + 1}" for i in range(d)]:
        raise ValueError(f"{path}: header must be x1,...,xd[,w], got {header!r}")
    if data.shape[1] != len(cols):
        raise ValueError(f"{path}: row width does not match header")
    if not np.all(np.isfinite(data)):
        raise ValueError(f"{path}: non-finite values")
    pts = data[:, :d]
    w = data[:, d] if has_w else None
    return DiscreteMeasure.create(pts, w, n=n, resolution=resolution)


def save_csv(path, measure: DiscreteMeasure, weights: bool = True) -> None:
    cols = [f"x{i + 1}" for i in range(measure.d)]
    arr = measure.points
    if weights:
        cols.append("w")
        arr = np.column_stack([arr, measure.weights])
    header = ",".join(cols)
    np.savetxt(path, arr, delimiter=",", header=header, comments="",
               fmt="%.17g")
