"""Brute-force reference implementations shared by the test modules."""

import itertools
import math

import numpy as np


def line_search_oracle(pts, w, x, r, n_angles=721, n_offsets=201):
    """Best L1 line fit by exhaustive search over angles and normal
    offsets; the offset grid spans the projections seen in the ball."""
    best = math.inf
    for theta in np.linspace(0.0, math.pi, n_angles):
        normal = np.array([-math.sin(theta), math.cos(theta)])
        proj = pts @ normal
        offsets = np.linspace(proj.min(), proj.max(), n_offsets)
        obj = (w[:, None] * np.abs(proj[:, None] - offsets[None, :])).sum(0)
        best = min(best, float(obj.min()))
    return best / r ** 2


def two_atom_oracle(a, b, bp, bq, L):
    """Exact optimum of max a u - b v over the hexagon
    {|u| <= bp, |v| <= bq, |u - v| <= L}: scan every vertex."""
    cands = [(0.0, 0.0)]
    cands += [(su * bp, sv * bq) for su in (1, -1) for sv in (1, -1)]
    cands += [(su * bp, su * bp - s * L) for su in (1, -1) for s in (1, -1)]
    cands += [(sv * bq + s * L, sv * bq) for sv in (1, -1) for s in (1, -1)]
    best = -math.inf
    for u, v in cands:
        if (abs(u) <= bp + 1e-12 and abs(v) <= bq + 1e-12
                and abs(u - v) <= L + 1e-12):
            best = max(best, a * u - b * v)
    return best


def assignment_oracle(pts_a, pts_b, w, center, radius):
    """Equal-mass brute force: each atom either transports directly or is
    killed at its boundary distance.  Direct plans are optimal because
    Euclidean gaps satisfy the triangle inequality and the boundary
    distance is 1-Lipschitz, and some integral plan attains the LP value
    because the constraint matrix is a network matrix."""
    bnd_a = radius - np.linalg.norm(pts_a - center, axis=1)
    bnd_b = radius - np.linalg.norm(pts_b - center, axis=1)
    na, nb = len(pts_a), len(pts_b)
    best = math.inf
    for k in range(min(na, nb) + 1):
        for sub_a in itertools.combinations(range(na), k):
            for sub_b in itertools.permutations(range(nb), k):
                cost = sum(float(np.linalg.norm(pts_a[i] - pts_b[j]))
                           for i, j in zip(sub_a, sub_b))
                cost += sum(bnd_a[i] for i in range(na) if i not in sub_a)
                cost += sum(bnd_b[j] for j in range(nb) if j not in sub_b)
                best = min(best, cost)
    return w * best
