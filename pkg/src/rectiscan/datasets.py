"""Deterministic sample-measure generators.

Every generator is a pure function of its GeneratorSpec: the same kind,
parameters, budget and seed reproduce the same measure bit for bit.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .measure import DiscreteMeasure

KINDS = ("plane", "segment", "circle", "lipschitz_graph", "cantor4",
         "perturbed_plane", "atom_cloud")


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    budget: int = 1000
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if self.budget < 1:
            raise ValueError("budget must be positive")

    def param(self, name, default=None):
        if name in self.params:
            return self.params[name]
        if default is None:
            raise ValueError(f"{self.kind} needs parameter {name!r}")
        return default


def generate(spec: GeneratorSpec) -> DiscreteMeasure:
    builder = {
        "plane": _plane,
        "segment": _segment,
        "circle": _circle,
        "lipschitz_graph": _lipschitz_graph,
        "cantor4": _cantor4,
        "perturbed_plane": _perturbed_plane,
        "atom_cloud": _atom_cloud,
    }[spec.kind]
    return builder(spec)


def _segment(spec) -> DiscreteMeasure:
    length = float(spec.param("length", 1.0))
    x = np.linspace(0.0, length, spec.budget)
    pts = np.column_stack([x, np.zeros_like(x)])
    w = np.full(spec.budget, length / spec.budget)
    return DiscreteMeasure.create(pts, w, n=1)


def _circle(spec) -> DiscreteMeasure:
    rho = float(spec.param("radius", 1.0))
    if rho <= 0:
        raise ValueError("circle radius must be positive")
    theta = 2.0 * np.pi * np.arange(spec.budget) / spec.budget
    pts = rho * np.column_stack([np.cos(theta), np.sin(theta)])
    w = np.full(spec.budget, 2.0 * np.pi * rho / spec.budget)
    return DiscreteMeasure.create(pts, w, n=1)


def _plane(spec) -> DiscreteMeasure:
    side = float(spec.param("side", 1.0))
    m = max(2, int(round(np.sqrt(spec.budget))))
    g = np.linspace(0.0, side, m)
    xx, yy = np.meshgrid(g, g, indexing="ij")
    pts = np.column_stack([xx.ravel(), yy.ravel(), np.zeros(m * m)])
    w = np.full(m * m, side ** 2 / (m * m))
    return DiscreteMeasure.create(pts, w, n=2)


# profile name -> (y(u), y'(u)) with u = 2 pi f x
_PROFILES = {
    "sin": (np.sin, np.cos),
    "abs_sin": (lambda u: np.abs(np.sin(u)),
                lambda u: np.sign(np.sin(u)) * np.cos(u)),
}


def _lipschitz_graph(spec) -> DiscreteMeasure:
    amp = float(spec.param("amplitude", 0.3))
    freq = float(spec.param("frequency", 1.0))
    profile = spec.param("profile", "sin")
    if profile not in _PROFILES:
        raise ValueError(f"unknown graph profile {profile!r}")
    prof, dprof = _PROFILES[profile]

    # dense arc-length table; kinks of |sin| are grid points so the
    # cumulative trapezoid stays second-order accurate everywhere
    cells = 1 << 19
    xs = np.linspace(0.0, 1.0, cells + 1)
    kinks = np.arange(0.0, 1.0 + 1e-12, 0.5 / max(freq, 1e-12))
    xs = np.unique(np.concatenate([xs, kinks[kinks <= 1.0]]))
    speed = np.sqrt(1.0 + (amp * 2.0 * np.pi * freq * dprof(2.0 * np.pi * freq * xs)) ** 2)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (speed[1:] + speed[:-1]) * np.diff(xs))])
    total = cum[-1]

    # invert the piecewise-linear table exactly at equispaced arc lengths
    targets = np.linspace(0.0, total, spec.budget)
    hi = np.clip(np.searchsorted(cum, targets, side="left"), 1, len(cum) - 1)
    lo = hi - 1
    seg = cum[hi] - cum[lo]
    frac = np.where(seg > 0, (targets - cum[lo]) / np.where(seg > 0, seg, 1.0), 0.0)
    x = xs[lo] + frac * (xs[hi] - xs[lo])
    y = amp * prof(2.0 * np.pi * freq * x)
    w = np.full(spec.budget, total / spec.budget)
    return DiscreteMeasure.create(np.column_stack([x, y]), w, n=1)


def _cantor4(spec) -> DiscreteMeasure:
    K = int(spec.param("K", 4))
    if K < 1:
        raise ValueError("cantor4 needs K >= 1")
    side = float(spec.param("side", 1.0))
    corners = np.zeros((1, 2))
    s = side
    for _ in range(K):
        s /= 4.0
        shift = 3.0 * s
        corners = np.concatenate([
            corners,
            corners + [shift, 0.0],
            corners + [0.0, shift],
            corners + [shift, shift],
        ])
    centers = corners + s / 2.0
    w = np.full(centers.shape[0], side / centers.shape[0])
    return DiscreteMeasure.create(centers, w, n=1)


def _perturbed_plane(spec) -> DiscreteMeasure:
    noise = float(spec.param("noise", 0.01))
    n = int(spec.param("n", 1))
    rng = np.random.default_rng(spec.seed)
    if n == 1:
        base = _segment(spec)
        disp = np.zeros_like(base.points)
        disp[:, 1] = noise * rng.standard_normal(base.points.shape[0])
    elif n == 2:
        base = _plane(spec)
        disp = np.zeros_like(base.points)
        disp[:, 2] = noise * rng.standard_normal(base.points.shape[0])
    else:
        raise ValueError("perturbed_plane supports n in {1, 2}")
    return DiscreteMeasure.create(base.points + disp, base.weights, n=n)


def _atom_cloud(spec) -> DiscreteMeasure:
    d = int(spec.param("d", 2))
    n = int(spec.param("n", 1))
    rng = np.random.default_rng(spec.seed)
    pts = rng.uniform(0.0, 1.0, size=(spec.budget, d))
    w = rng.uniform(0.5, 1.5, size=spec.budget)
    w *= 1.0 / w.sum()
    return DiscreteMeasure.create(pts, w, n=n)
