"""Multiscale density-difference coefficients and Carleson statistics.

The point functionals compare a measure's mass at one scale against the
next octave: delta_density through raw ball masses, the smooth variants
through convolution against a difference or scale-derivative kernel.
coefficient_field tabulates any functional on a (center, scale) grid and
carleson_norm aggregates a field into per-ball normalized square sums,
their sup and the growth slope across scales.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .kernels import (MAX_DERIVATIVE_ORDER, KernelSpec, difference_radial,
                      dk_phi_radial, truncation_factor)
from .measure import BoundaryGauge, DiscreteMeasure, SpatialIndex

TAGS = ("delta-density", "delta-smooth", "delta-smooth-dt", "delta-smooth-k",
        "delta-smooth-dt-k", "beta1", "beta2", "alpha", "wcd-defect")
_KERNEL_TAGS = ("delta-smooth", "delta-smooth-dt", "delta-smooth-k",
                "delta-smooth-dt-k")
MAX_EXACT_CENTERS = 5000
BOUNDARY_MARGIN = 2.0


@dataclass(frozen=True)
class Functional:
    """A multiscale coefficient: tag plus kernel/order parameters."""
    tag: str
    kernel: KernelSpec | None = None
    k: int = 1

    def __post_init__(self):
        if self.tag not in TAGS:
            raise ValueError(f"unknown functional tag {self.tag!r}")
        if self.tag in _KERNEL_TAGS:
            if self.kernel is None or not self.kernel.smooth:
                raise ValueError(f"{self.tag} needs a smooth kernel spec")
        elif self.kernel is not None:
            raise ValueError(f"{self.tag} takes no kernel spec")
        if self.tag.endswith("-k"):
            if not 1 <= self.k <= MAX_DERIVATIVE_ORDER:
                raise ValueError(f"k must be in 1..{MAX_DERIVATIVE_ORDER}")

    def __str__(self) -> str:
        parts = [self.tag]
        if self.kernel is not None:
            parts.append(str(self.kernel))
        if self.tag.endswith("-k"):
            parts.append(f"k={self.k}")
        return "|".join(parts)


# ---------------------------------------------------------------------------
# point functionals


def delta_density(measure: DiscreteMeasure, index: SpatialIndex, x,
                  r: float) -> float:
    """mu(B(x,r))/r^n - mu(B(x,2r))/(2r)^n."""
    if not measure.resolution <= r <= measure.diameter():
        raise ValueError("r out of the valid scale range")
    n = measure.n
    m1 = index.ball_mass(x, r)
    m2 = index.ball_mass(x, 2.0 * r)
    return m1 / r ** n - m2 / (2.0 * r) ** n


def _truncated_sum(measure: DiscreteMeasure, index: SpatialIndex,
                   spec: KernelSpec, x, radius: float, evaluate) -> float:
    radius = min(radius, measure.diameter())
    idx = index.ball_indices(x, radius)
    if idx.size == 0:
        return 0.0
    s = np.sqrt(((measure.points[idx] - np.asarray(x, dtype=float)) ** 2).sum(axis=1))
    return float((measure.weights[idx] * evaluate(s)).sum())


def delta_smooth(measure: DiscreteMeasure, index: SpatialIndex,
                 spec: KernelSpec, x, t: float) -> float:
    """Integral of (phi_t - phi_2t)(y - x) against the measure."""
    if not spec.smooth:
        raise ValueError("delta_smooth needs a smooth kernel")
    if not t >= measure.resolution:
        raise ValueError("t below the measure resolution")
    rad = truncation_factor(spec) * 2.0 * t
    return _truncated_sum(measure, index, spec, x, rad,
                          lambda s: difference_radial(spec, s, t, 1))


def delta_smooth_dt(measure: DiscreteMeasure, index: SpatialIndex,
                    spec: KernelSpec, x, t: float) -> float:
    """Integral of the scale derivative t d/dt phi_t(y - x)."""
    if not spec.smooth:
        raise ValueError("delta_smooth_dt needs a smooth kernel")
    if not t >= measure.resolution:
        raise ValueError("t below the measure resolution")
    rad = truncation_factor(spec) * t
    return _truncated_sum(measure, index, spec, x, rad,
                          lambda s: dk_phi_radial(spec, s, t, 1))


def delta_k(measure: DiscreteMeasure, index: SpatialIndex, spec: KernelSpec,
            x, t: float, k: int, discrete: bool = True) -> float:
    """Order-k octave difference (discrete) or scale derivative of phi_t."""
    if not spec.smooth:
        raise ValueError("delta_k needs a smooth kernel")
    if not 1 <= k <= MAX_DERIVATIVE_ORDER:
        raise ValueError(f"k must be in 1..{MAX_DERIVATIVE_ORDER}")
    if not t >= measure.resolution:
        raise ValueError("t below the measure resolution")
    if discrete:
        rad = truncation_factor(spec) * 2.0 ** k * t
        return _truncated_sum(measure, index, spec, x, rad,
                              lambda s: difference_radial(spec, s, t, k))
    rad = truncation_factor(spec) * t
    return _truncated_sum(measure, index, spec, x, rad,
                          lambda s: dk_phi_radial(spec, s, t, k))


# ---------------------------------------------------------------------------
# fields


def geometric_scales(lo: float, hi: float, ratio: float = 2.0) -> np.ndarray:
    """Geometric scale grid from lo up to at most hi (inclusive on ties)."""
    if not 0 < lo <= hi:
        raise ValueError("need 0 < lo <= hi")
    if not ratio > 1:
        raise ValueError("ratio must exceed 1")
    count = int(math.floor(math.log(hi / lo) / math.log(ratio) + 1e-9))
    return lo * ratio ** np.arange(count + 1)


@dataclass(frozen=True)
class CoefficientField:
    """Values of one multiscale functional on a (center, scale) grid.

    include_weights carry the measure weight of each center rescaled by
    its sampling inclusion probability, so weighted cell sums remain
    unbiased under center subsampling.  Cells whose evaluation failed
    hold NaN and are listed in poisoned.
    """
    functional: Functional
    center_indices: np.ndarray
    include_weights: np.ndarray
    boundary_dist: np.ndarray
    scales: np.ndarray
    values: np.ndarray
    n: int
    poisoned: tuple = ()

    def __post_init__(self):
        if self.values.shape != (self.center_indices.size, self.scales.size):
            raise ValueError("field matrix does not match its grids")

    def flags(self, margin: float = BOUNDARY_MARGIN) -> np.ndarray:
        """Cells whose center sits within margin*r of the data boundary."""
        return self.boundary_dist[:, None] < margin * self.scales[None, :]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["center_index", "r", "value"])
            for i, ci in enumerate(self.center_indices):
                for j, r in enumerate(self.scales):
                    writer.writerow([int(ci), f"{r:.17g}",
                                     f"{self.values[i, j]:.17g}"])


def _sample_centers(measure: DiscreteMeasure, max_centers: int, seed: int):
    total = measure.total_mass()
    count = measure.points.shape[0]
    if count <= max_centers:
        return np.arange(count, dtype=np.intp), measure.weights.copy()
    rng = np.random.default_rng(seed)
    p = measure.weights / total
    draws = np.sort(rng.choice(count, size=max_centers, replace=True, p=p))
    return draws.astype(np.intp), np.full(max_centers, total / max_centers)


def _cell_evaluator(measure: DiscreteMeasure, index: SpatialIndex,
                    functional: Functional):
    tag = functional.tag
    if tag == "delta-density":
        return lambda x, r: delta_density(measure, index, x, r)
    if tag == "delta-smooth":
        return lambda x, r: delta_smooth(measure, index, functional.kernel, x, r)
    if tag == "delta-smooth-dt":
        return lambda x, r: delta_smooth_dt(measure, index, functional.kernel, x, r)
    if tag == "delta-smooth-k":
        return lambda x, r: delta_k(measure, index, functional.kernel, x, r,
                                    functional.k, discrete=True)
    if tag == "delta-smooth-dt-k":
        return lambda x, r: delta_k(measure, index, functional.kernel, x, r,
                                    functional.k, discrete=False)
    if tag == "beta1":
        from .geometry import beta1
        return lambda x, r: beta1(measure, index, x, r)[0]
    if tag == "beta2":
        from .geometry import beta2
        return lambda x, r: beta2(measure, index, x, r)[0]
    if tag == "alpha":
        from .geometry import LIGHT_ALPHA, alpha_coeff
        return lambda x, r: alpha_coeff(measure, index, x, r, LIGHT_ALPHA).value
    if tag == "wcd-defect":
        from .uniformity import wcd_defect
        return lambda x, r: wcd_defect(measure, index, x, r).defect
    raise ValueError(f"unknown functional tag {tag!r}")


def coefficient_field(measure: DiscreteMeasure, index: SpatialIndex,
                      functional: Functional, scales,
                      center_indices=None, max_centers: int = MAX_EXACT_CENTERS,
                      seed: int = 0, threads: int = 1) -> CoefficientField:
    """Tabulate a functional for every (center, scale) cell.

    Cells are evaluated by the same code path as the corresponding point
    operation; a cell that raises or returns a non-finite value is poisoned
    (NaN) and recorded, never silently zeroed.
    """
    scales = np.asarray(scales, dtype=float)
    if scales.size == 0 or not np.all(np.diff(scales) > 0):
        raise ValueError("scales must be a nonempty increasing grid")
    if center_indices is not None:
        center_indices = np.asarray(center_indices, dtype=np.intp)
        include = measure.weights[center_indices].copy()
    else:
        center_indices, include = _sample_centers(measure, max_centers, seed)

    gauge = BoundaryGauge(measure)
    centers = measure.points[center_indices]
    bdist = gauge.distance(centers)

    poisoned = []
    evaluate = _cell_evaluator(measure, index, functional)

    def run_row(i: int) -> np.ndarray:
        row = np.empty(scales.size)
        for j, r in enumerate(scales):
            try:
                v = evaluate(centers[i], float(r))
            except (ValueError, ArithmeticError) as exc:
                poisoned.append((i, j, str(exc)))
                v = math.nan
            else:
                if not math.isfinite(v):
                    poisoned.append((i, j, "non-finite value"))
                    v = math.nan
            row[j] = v
        return row

    rows = range(centers.shape[0])
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(run_row, rows))
    else:
        chunks = [run_row(i) for i in rows]
    values = np.array(chunks).reshape(centers.shape[0], scales.size)
    poisoned.sort()
    return CoefficientField(functional, center_indices, include, bdist,
                            scales, values, measure.n, tuple(poisoned))


# ---------------------------------------------------------------------------
# Carleson aggregation


@dataclass(frozen=True)
class BallRecord:
    center: np.ndarray
    radius: float
    value: float
    octaves: float          # log2(R / r_min)
    cells: int
    flagged: int
    poisoned: int


@dataclass(frozen=True)
class CarlesonReport:
    """Per-ball normalized square sums of a coefficient field.

    value(B) approximates (1/R^n) int_0^R int_B |v|^2 dmu dr/r by the
    log-midpoint rule over the field's scale grid.
    """
    functional: Functional
    rows: tuple
    skipped: tuple          # (center, R, reason)
    sup_value: float
    slope: float
    correlation: float
    r_min: float
    exclude_flagged: bool
    margin: float

    def to_json(self) -> dict:
        return {
            "schema_version": 1,
            "functional": str(self.functional),
            "sup_value": self.sup_value,
            "slope": self.slope,
            "correlation": self.correlation,
            "r_min": self.r_min,
            "exclude_flagged": self.exclude_flagged,
            "margin": self.margin,
            "rows": [
                {
                    "center": [float(v) for v in row.center],
                    "radius": row.radius,
                    "value": row.value,
                    "octaves": row.octaves,
                    "cells": row.cells,
                    "flagged": row.flagged,
                    "poisoned": row.poisoned,
                }
                for row in self.rows
            ],
            "skipped": [
                {"center": [float(v) for v in c], "radius": r, "reason": why}
                for c, r, why in self.skipped
            ],
        }


def _log_steps(scales: np.ndarray) -> np.ndarray:
    logs = np.log(scales)
    steps = np.empty_like(logs)
    if logs.size == 1:
        steps[:] = math.log(2.0)    # lone scale: one octave by convention
        return steps
    steps[0] = logs[1] - logs[0]
    steps[-1] = logs[-1] - logs[-2]
    if logs.size > 2:
        steps[1:-1] = 0.5 * (logs[2:] - logs[:-2])
    return steps


def carleson_norm(field: CoefficientField, measure: DiscreteMeasure,
                  balls, exclude_flagged: bool = True,
                  margin: float = BOUNDARY_MARGIN) -> CarlesonReport:
    """Aggregate a field into per-ball values, their sup and growth slope.

    Balls holding none of the field's sampled centers are skipped and
    recorded.  The slope regresses value against log2(R / r_min); with
    fewer than two distinct abscissas it is 0 with correlation 0.
    """
    n = field.n
    r_min = float(field.scales.min())
    steps = _log_steps(field.scales)
    centers = measure.points[field.center_indices]
    flags = field.flags(margin)
    finite = np.isfinite(field.values)
    sq = np.where(finite, field.values, 0.0) ** 2

    rows, skipped = [], []
    for x0, radius in balls:
        x0 = np.asarray(x0, dtype=float)
        radius = float(radius)
        if not field.scales[0] <= radius <= field.scales[-1] * 2.0:
            raise ValueError("ball radius outside the field scale span")
        in_ball = np.sqrt(((centers - x0) ** 2).sum(axis=1)) <= radius
        if not in_ball.any():
            skipped.append((x0, radius, "ball holds no sampled centers"))
            continue
        in_scale = field.scales <= radius * (1.0 + 1e-12)
        cell = in_ball[:, None] & in_scale[None, :]
        poisoned = int((cell & ~finite).sum())
        use = cell & finite
        flagged = int((use & flags).sum())
        if exclude_flagged:
            use = use & ~flags
        total = float((sq[use] * (field.include_weights[:, None]
                                  * steps[None, :])[use]).sum())
        rows.append(BallRecord(x0, radius, total / radius ** n,
                               math.log2(radius / r_min), int(use.sum()),
                               flagged, poisoned))

    values = np.array([row.value for row in rows])
    octaves = np.array([row.octaves for row in rows])
    sup_value = float(values.max()) if values.size else 0.0
    if values.size >= 2 and np.ptp(octaves) > 0:
        slope, _ = np.polyfit(octaves, values, 1)
        sd = values.std()
        corr = float(np.corrcoef(octaves, values)[0, 1]) if sd > 0 else 0.0
    else:
        slope, corr = 0.0, 0.0
    return CarlesonReport(field.functional, tuple(rows), tuple(skipped),
                          sup_value, float(slope), corr, r_min,
                          exclude_flagged, margin)
