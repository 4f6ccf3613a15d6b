"""Rectifiable vs. self-similar growth of the normalized square sums.

Tabulates the two-ball density difference and its gauss:N=1 smoothing
over nested balls on three datasets: a segment, a Lipschitz sine graph,
and the generation-8 four-corner Cantor cloud.  Flat data keeps the
per-ball value V(x0, R) bounded with slope near zero in log2(R/r_min);
the Cantor cloud grows V affinely in the number of octaves.

Usage: python scripts/run_dichotomy.py [--skip-cantor]
"""

import argparse
import math
import time

import numpy as np

from rectiscan import (Functional, GeneratorSpec, SpatialIndex, carleson_norm,
                       coefficient_field, generate, parse_kernel)


def flat_balls(measure, anchor):
    """Nested balls centered where the data is thickest around anchor."""
    i = int(np.argmin(((measure.points - anchor) ** 2).sum(axis=1)))
    mid = measure.points[i]
    return [(mid, 0.25 / 2.0 ** j) for j in range(4)]


def flat_scales(measure, top: float) -> np.ndarray:
    # 10.5x spacing keeps every radius off the sample grid, so closed-ball
    # counts do not sit on membership ties
    k = int(math.floor(math.log2(top / (10.5 * measure.resolution / 3.0))))
    return top / 2.0 ** np.arange(k, -1, -1)


def run_flat(tag: str, kind: str, functional: Functional):
    spec = GeneratorSpec(kind, budget=2001, seed=0,
                         params={"amplitude": 0.3} if kind == "lipschitz_graph" else {})
    measure = generate(spec)
    index = SpatialIndex(measure)
    scales = flat_scales(measure, 0.25)
    field = coefficient_field(measure, index, functional, scales,
                              max_centers=5000, seed=0)
    report = carleson_norm(field, measure, flat_balls(measure, np.array([0.5, 0.0])),
                           exclude_flagged=True)
    print("%-28s sup V %.4g   slope %+.5f   corr %+.3f"
          % (tag, report.sup_value, report.slope, report.correlation))
    return report


def run_cantor(functional: Functional, max_centers: int):
    measure = generate(GeneratorSpec("cantor4", budget=65536, seed=0,
                                     params={"K": 8}))
    index = SpatialIndex(measure)
    corner = measure.points[np.lexsort(measure.points.T[::-1])[0]]
    balls = [(corner, math.sqrt(2.0) * 4.0 ** -m) for m in range(5)]
    scales = 2.0 ** np.arange(-10, 1).astype(float)
    field = coefficient_field(measure, index, functional, scales,
                              max_centers=max_centers, seed=0)
    # the cloud has no interior at coarse scales; boundary flags would
    # empty the balls
    report = carleson_norm(field, measure, balls, exclude_flagged=False)
    print("%-28s sup V %.4g   slope %+.5f   corr %+.3f"
          % ("cantor4 K=8", report.sup_value, report.slope, report.correlation))
    return report


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--skip-cantor", action="store_true",
                    help="only the fast flat-data half")
    args = ap.parse_args()

    density = Functional("delta-density")
    smooth = Functional("delta-smooth", parse_kernel("gauss:N=1", 1))

    t0 = time.time()
    for functional, label, cantor_centers in ((density, "delta-density", 5000),
                                              (smooth, "delta-smooth", 2500)):
        print("== %s ==" % label)
        run_flat("segment", "segment", functional)
        run_flat("lipschitz graph (amp 0.3)", "lipschitz_graph", functional)
        if not args.skip_cantor:
            run_cantor(functional, cantor_centers)
        print()
    print("total %.1f s" % (time.time() - t0))


if __name__ == "__main__":
    main()
