"""Constant-density probes.

wcd_defect fits the best constant c1 to the ball-mass ratios mu(B(y,t))/t^n
over a sampled (y, t) grid inside a ball and reports the sup deviation,
normalized by r^n.  uniformity_identity_check evaluates the smooth-profile
integral t^{-n} sum w f(|x-y|^2/t^2) over a (center, t) grid and reports
its maximal relative variation; the integral is constant in (x, t) exactly
when the measure looks n-uniform through that profile.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernels import KernelSpec, phi_radial, truncation_factor
from .measure import DiscreteMeasure, SpatialIndex


def sqrt2_scales(lo: float, hi: float) -> np.ndarray:
    """Geometric grid with ratio sqrt(2) from lo up to at most hi."""
    if not 0 < lo <= hi:
        raise ValueError("need 0 < lo <= hi")
    count = int(math.floor(math.log(hi / lo) / (0.5 * math.log(2.0)) + 1e-9))
    return lo * np.sqrt(2.0) ** np.arange(count + 1)


@dataclass(frozen=True)
class WcdDefect:
    """Best-constant density defect of a ball.

    defect = sup over sampled (y, t) of |mu(B(y,t)) - c1 t^n| / r^n,
    minimized over c1 >= 0.
    """
    x0: np.ndarray
    r: float
    c1: float
    defect: float
    n_centers: int
    t_grid: np.ndarray
    seed: int

    def to_json(self) -> dict:
        return {
            "schema_version": 1,
            "x0": [float(v) for v in self.x0],
            "r": self.r,
            "c1": self.c1,
            "defect": self.defect,
            "n_centers": self.n_centers,
            "t_grid": [float(t) for t in self.t_grid],
            "seed": self.seed,
        }


def wcd_defect(measure: DiscreteMeasure, index: SpatialIndex, x0, r: float,
               max_centers: int = 200, seed: int = 0) -> WcdDefect:
    """Weak-constant-density defect of B(x0, r)."""
    x0 = np.asarray(x0, dtype=float)
    if not r >= 10.0 * measure.resolution:
        raise ValueError("r must be at least 10 times the measure resolution")
    idx = index.ball_indices(x0, r)
    if idx.size < 2:
        raise ValueError("ball holds too few support points")
    if idx.size > max_centers:
        rng = np.random.default_rng(seed)
        idx = np.sort(rng.choice(idx, size=max_centers, replace=False))
    t_grid = sqrt2_scales(measure.resolution, r)
    n = measure.n

    masses = np.empty((idx.size, t_grid.size))
    t_max = float(t_grid[-1])
    for row, pi in enumerate(idx):
        y = measure.points[pi]
        near = index.ball_indices(y, t_max)
        s = np.sqrt(((measure.points[near] - y) ** 2).sum(axis=1))
        w = measure.weights[near]
        for col, t in enumerate(t_grid):
            masses[row, col] = w[s <= t].sum()

    tn = t_grid ** n
    ratios = masses / tn[None, :]

    def defect_of(c1: float) -> float:
        return float(np.abs(masses - c1 * tn[None, :]).max()) / r ** n

    c1, defect = _golden_min(defect_of, 0.0, 2.0 * float(ratios.max()), 60)
    return WcdDefect(x0, float(r), float(c1), float(defect), int(idx.size),
                     t_grid, seed)


def _golden_min(f, lo: float, hi: float, iters: int):
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
    return (c, fc) if fc <= fd else (d, fd)


@dataclass(frozen=True)
class UniformityReport:
    """Relative variation of the profile integral over a (center, t) grid."""
    spec: KernelSpec
    c: float
    max_variation: float
    center_indices: np.ndarray
    t_grid: np.ndarray
    values: np.ndarray      # grid of t^{-n} sum w f(s^2/t^2)

    def to_json(self) -> dict:
        return {
            "schema_version": 1,
            "kernel": str(self.spec),
            "c": self.c,
            "max_variation": self.max_variation,
            "n_centers": int(self.center_indices.size),
            "t_grid": [float(t) for t in self.t_grid],
        }


def uniformity_identity_check(measure: DiscreteMeasure, index: SpatialIndex,
                              spec: KernelSpec, center_indices,
                              t_grid) -> UniformityReport:
    """Max relative deviation of the smooth density profile from constancy.

    The reference constant is the median over the grid, so edge cells do
    not drag the baseline.
    """
    if not spec.smooth:
        raise ValueError("identity check needs a smooth kernel profile")
    center_indices = np.asarray(center_indices, dtype=np.intp)
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size == 0 or center_indices.size == 0:
        raise ValueError("need at least one center and one scale")
    lo, hi = float(t_grid.min()), float(t_grid.max())
    if lo < 5.0 * measure.resolution or hi > measure.diameter() / 4.0:
        raise ValueError("t grid must sit in [5*resolution, diam/4]")

    fac = truncation_factor(spec)
    diam = measure.diameter()
    values = np.empty((center_indices.size, t_grid.size))
    for row, pi in enumerate(center_indices):
        x = measure.points[pi]
        rad = min(fac * hi, diam)
        near = index.ball_indices(x, rad)
        s = np.sqrt(((measure.points[near] - x) ** 2).sum(axis=1))
        w = measure.weights[near]
        for col, t in enumerate(t_grid):
            keep = s <= min(fac * t, diam)
            values[row, col] = (w[keep] * phi_radial(spec, s[keep], t)).sum()

    c = float(np.median(values))
    if c <= 0:
        raise ValueError("degenerate profile values; grid median is not positive")
    variation = float(np.abs(values / c - 1.0).max())
    return UniformityReport(spec, c, variation, center_indices, t_grid, values)
