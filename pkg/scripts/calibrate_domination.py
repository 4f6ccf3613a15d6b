"""Calibrate the smooth-by-density domination constant.

For seeded noisy-line measures, compares the per-center discretized
square sums over a sqrt(2) scale grid:

    S_smooth(x)  = sum_j |smoothed density difference(x, R_j)|^2 dlog
    S_density(x) = sum_j |two-ball density difference(x, r_j)|^2 dlog

The smoothed difference is a bounded convex combination of the two-ball
differences across scales, so S_smooth <= C * S_density + eps should
hold with a dimensionless C of order one.  This script measures the
worst ratio over many seeds and prints the constant to freeze.

Usage: python scripts/calibrate_domination.py [--seeds 20] [--centers 40]
"""

import argparse
import math

import numpy as np

from rectiscan import (DiscreteMeasure, Functional, GeneratorSpec, SpatialIndex,
                       coefficient_field, generate, parse_kernel)
from rectiscan.squares import _log_steps

EPS = 1e-6


def square_sums(measure: DiscreteMeasure, functional: Functional,
                scales, centers) -> np.ndarray:
    index = SpatialIndex(measure)
    field = coefficient_field(measure, index, functional, scales,
                              center_indices=centers)
    steps = _log_steps(field.scales)
    sq = np.where(np.isfinite(field.values), field.values, 0.0) ** 2
    return (sq * steps[None, :]).sum(axis=1)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--centers", type=int, default=40)
    ap.add_argument("--budget", type=int, default=1500)
    ap.add_argument("--noise", type=float, default=0.01)
    args = ap.parse_args()

    smooth = Functional("delta-smooth", parse_kernel("gauss:N=1", 1))
    density = Functional("delta-density")

    worst = 0.0
    print("seed  max S_smooth  max S_density  needed C")
    for seed in range(args.seeds):
        spec = GeneratorSpec("perturbed_plane", budget=args.budget, seed=seed,
                             params={"n": 1, "noise": args.noise})
        measure = generate(spec)
        rng = np.random.default_rng(seed)
        centers = np.sort(rng.choice(
            measure.points.shape[0], size=args.centers, replace=False,
            p=measure.weights / measure.weights.sum()))
        lo = 10.0 * measure.resolution
        hi = measure.diameter() / 8.0
        count = int(math.floor(math.log(hi / lo) / (0.5 * math.log(2.0))))
        scales = lo * np.sqrt(2.0) ** np.arange(count + 1)

        s_smooth = square_sums(measure, smooth, scales, centers)
        s_density = square_sums(measure, density, scales, centers)
        # a center needs C >= (S_smooth - eps) / S_density; below eps any
        # nonnegative C works
        need = np.where(s_smooth > EPS, (s_smooth - EPS) / s_density, 0.0)
        worst = max(worst, float(need.max()))
        print("%4d  %12.5g  %13.5g  %8.4g"
              % (seed, s_smooth.max(), s_density.max(), need.max()))

    print()
    print("worst needed C : %.6g" % worst)
    print("frozen C (1.5x): %.6g" % (1.5 * worst))


if __name__ == "__main__":
    main()
