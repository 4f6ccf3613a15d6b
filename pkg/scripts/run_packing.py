"""Flatness packing audits: bounded on graphs, growing on the Cantor cloud.

For a root cube R the audit reports the cumulative ratio

    sum_{Q below R, depth <= d} alpha(Q)^2 mu(Q) / mu(R)

per depth d.  Flat data (segment, small-slope Lipschitz graph) keeps the
ratio near its discretization floor; the four-corner Cantor cloud adds a
roughly constant alpha^2 mass per generation, so the ratio climbs
affinely in depth.

Usage: python scripts/run_packing.py [--skip-cantor]
"""

import argparse
import time

import numpy as np

from rectiscan import GeneratorSpec, SpatialIndex, build_lattice, generate
from rectiscan.geometry import alpha_packing_audit


def audit(kind: str, budget: int, depth: int, params=None):
    measure = generate(GeneratorSpec(kind, budget=budget, seed=0,
                                     params=params or {}))
    index = SpatialIndex(measure)
    lattice = build_lattice(measure, index, depth)
    root = max(lattice.generation(0), key=lambda c: (c.mass, -c.cube_id))
    return alpha_packing_audit(measure, index, lattice, root, depth)


def show(tag: str, result) -> None:
    cum = [result.cumulative[d] for d in sorted(result.cumulative)]
    slope = float(np.polyfit(np.arange(len(cum)), cum, 1)[0]) if len(cum) > 1 else 0.0
    print("%-24s ratios %s   slope/gen %+.4f"
          % (tag, " ".join("%.4f" % v for v in cum), slope))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--skip-cantor", action="store_true",
                    help="only the fast flat-data audits")
    args = ap.parse_args()

    t0 = time.time()
    show("segment", audit("segment", 2001, 4))
    show("lipschitz graph (amp 0.3)", audit("lipschitz_graph", 2001, 5,
                                            {"amplitude": 0.3}))
    if not args.skip_cantor:
        show("cantor4 K=8", audit("cantor4", 4 ** 8, 4, {"K": 8}))
    print("total %.1f s" % (time.time() - t0))


if __name__ == "__main__":
    main()
