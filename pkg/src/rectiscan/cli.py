"""Command line front end: generate datasets, tabulate functionals, report.

Exit codes: 0 success, 2 configuration error, 3 data error.  Every
subcommand with identical flags and seed writes byte-identical output;
partially written artifacts are removed when a run fails.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .datasets import KINDS, GeneratorSpec, generate
from .kernels import parse_kernel
from .measure import BoundaryGauge, DiscreteMeasure, SpatialIndex
from .squares import TAGS, Functional, carleson_norm, coefficient_field, geometric_scales


class ConfigError(Exception):
    pass


class DataError(Exception):
    pass


# ---------------------------------------------------------------------------
# dataset round trip

_DATASET_MAGIC = "# rectiscan-dataset"


def dataset_text(measure: DiscreteMeasure) -> str:
    """Self-describing CSV: a metadata comment line, then x1,..,xd,w rows."""
    cols = [f"x{i + 1}" for i in range(measure.d)] + ["w"]
    lines = ["%s schema_version=1 n=%d d=%d resolution=%.17g"
             % (_DATASET_MAGIC, measure.n, measure.d, measure.resolution),
             ",".join(cols)]
    for p, w in zip(measure.points, measure.weights):
        lines.append(",".join("%.17g" % v for v in p) + ",%.17g" % w)
    return "\n".join(lines) + "\n"


def write_dataset(measure: DiscreteMeasure, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(dataset_text(measure))


def read_dataset(path: str) -> DiscreteMeasure:
    if not os.path.exists(path):
        raise ConfigError(f"input path {path!r} does not exist")
    with open(path) as fh:
        head = fh.readline().strip()
        if not head.startswith(_DATASET_MAGIC):
            raise DataError(f"{path!r} is not a dataset file")
        meta = dict(tok.split("=", 1) for tok in head.split()[2:])
        fh.readline()  # column header
        try:
            body = np.loadtxt(fh, delimiter=",", ndmin=2)
            return DiscreteMeasure(body[:, :-1], body[:, -1],
                                   int(meta["n"]), float(meta["resolution"]))
        except (KeyError, ValueError) as exc:
            raise DataError(f"malformed dataset {path!r}: {exc}") from None


# ---------------------------------------------------------------------------
# shared option parsing


def _threads() -> int:
    raw = os.environ.get("RECTISCAN_THREADS", "1")
    try:
        val = int(raw)
    except ValueError:
        raise ConfigError(f"RECTISCAN_THREADS={raw!r} is not an integer")
    if val < 1:
        raise ConfigError("RECTISCAN_THREADS must be >= 1")
    return val


def _parse_params(pairs) -> dict:
    out = {}
    for item in pairs or ():
        if "=" not in item:
            raise ConfigError(f"--param {item!r} is not key=value")
        key, val = item.split("=", 1)
        for cast in (int, float):
            try:
                out[key] = cast(val)
                break
            except ValueError:
                continue
        else:
            out[key] = val
    return out


def _functional(args, n: int) -> Functional:
    kernel = None
    if args.kernel is not None:
        try:
            kernel = parse_kernel(args.kernel, n)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    try:
        return Functional(args.functional, kernel, getattr(args, "k", 1))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _scale_grid(args, measure: DiscreteMeasure) -> np.ndarray:
    diam = measure.diameter()
    if args.scales is None:
        lo, hi, ratio = 10.0 * measure.resolution, diam / 4.0, 2.0
    else:
        part = args.scales.split(":")
        if len(part) not in (2, 3):
            raise ConfigError("--scales must be LO:HI or LO:HI:RATIO")
        try:
            lo, hi = float(part[0]), float(part[1])
            ratio = float(part[2]) if len(part) == 3 else 2.0
        except ValueError:
            raise ConfigError(f"unparseable --scales {args.scales!r}") from None
    if not measure.resolution <= lo < hi <= diam:
        raise ConfigError("scale range must satisfy resolution <= lo < hi <= diameter")
    if not ratio > 1.0:
        raise ConfigError("scale ratio must exceed 1")
    return geometric_scales(lo, hi, ratio)


def _json_text(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


class _Emitter:
    """Collects artifact texts and writes them atomically at the end."""

    def __init__(self):
        self.pending = []

    def add(self, path: str, text: str) -> None:
        self.pending.append((path, text))

    def flush(self) -> None:
        written = []
        try:
            for path, text in self.pending:
                tmp = path + ".tmp"
                with open(tmp, "w") as fh:
                    fh.write(text)
                os.replace(tmp, path)
                written.append(path)
        except OSError:
            for path in written:
                try:
                    os.remove(path)
                except OSError:
                    pass
            raise


# ---------------------------------------------------------------------------
# subcommands


def _cmd_generate(args, out: _Emitter) -> None:
    try:
        spec = GeneratorSpec(args.kind, budget=args.points, seed=args.seed,
                             params=_parse_params(args.param))
        measure = generate(spec)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out.add(args.out, dataset_text(measure))


def _field(args, measure: DiscreteMeasure):
    index = SpatialIndex(measure)
    functional = _functional(args, measure.n)
    scales = _scale_grid(args, measure)
    try:
        return coefficient_field(measure, index, functional, scales,
                                 max_centers=args.max_centers, seed=args.seed,
                                 threads=_threads())
    except ValueError as exc:
        raise DataError(str(exc)) from None


def _cmd_analyze(args, out: _Emitter) -> None:
    measure = read_dataset(args.input)
    field = _field(args, measure)
    lines = ["center_index,r,value"]
    for i, ci in enumerate(field.center_indices):
        for j, r in enumerate(field.scales):
            lines.append("%d,%.17g,%.17g" % (int(ci), r, field.values[i, j]))
    out.add(args.out, "\n".join(lines) + "\n")


def _cmd_carleson(args, out: _Emitter) -> None:
    measure = read_dataset(args.input)
    balls = []
    for text in args.ball or ():
        try:
            coords, radius = text.rsplit(":", 1)
            center = np.array([float(v) for v in coords.split(",")])
            balls.append((center, float(radius)))
        except ValueError:
            raise ConfigError(f"--ball {text!r} is not X,..,X:R") from None
        if center.shape[0] != measure.d:
            raise ConfigError(f"--ball {text!r} has wrong dimension")
    if args.auto_balls:
        rng = np.random.default_rng(args.seed)
        picks = np.sort(rng.choice(measure.points.shape[0],
                                   size=min(args.auto_balls, measure.points.shape[0]),
                                   replace=False,
                                   p=measure.weights / measure.weights.sum()))
        radius = measure.diameter() / 4.0
        balls.extend((measure.points[i], radius) for i in picks)
    if not balls:
        raise ConfigError("no balls given; use --ball or --auto-balls")
    field = _field(args, measure)
    try:
        report = carleson_norm(field, measure, balls,
                               exclude_flagged=not args.include_flagged)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out.add(args.out, _json_text(report.to_json()))


def _cmd_alpha_audit(args, out: _Emitter) -> None:
    from .geometry import alpha_packing_audit
    from .lattice import build_lattice

    measure = read_dataset(args.input)
    index = SpatialIndex(measure)
    if args.depth > args.jmax:
        raise ConfigError("--depth cannot exceed --jmax")
    try:
        lattice = build_lattice(measure, index, args.jmax)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    # most massive top cube; ties cannot occur since masses sum to the total
    root = max(lattice.generation(0), key=lambda c: (c.mass, -c.cube_id))
    try:
        audit = alpha_packing_audit(measure, index, lattice, root, args.depth)
    except (ValueError, ArithmeticError) as exc:
        raise DataError(str(exc)) from None
    out.add(args.out, _json_text({
        "schema_version": 1,
        "root_id": audit.root_id,
        "root_mass": audit.root_mass,
        "cumulative": {str(d): audit.cumulative[d] for d in sorted(audit.cumulative)},
        "rows": [
            {"cube_id": r.cube_id, "j": r.j, "radius": r.radius,
             "alpha": r.alpha, "mass": r.mass}
            for r in audit.rows
        ],
    }))


def _cmd_wcd(args, out: _Emitter) -> None:
    from .uniformity import wcd_defect

    measure = read_dataset(args.input)
    index = SpatialIndex(measure)
    if args.center_index is not None:
        if not 0 <= args.center_index < measure.points.shape[0]:
            raise ConfigError("--center-index out of range")
        x0 = measure.points[args.center_index]
    elif args.center is not None:
        try:
            x0 = np.array([float(v) for v in args.center.split(",")])
        except ValueError:
            raise ConfigError(f"--center {args.center!r} unparseable") from None
        if x0.shape[0] != measure.d:
            raise ConfigError("--center has wrong dimension")
    else:
        raise ConfigError("give --center-index or --center")
    try:
        result = wcd_defect(measure, index, x0, args.radius,
                            max_centers=args.max_centers, seed=args.seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out.add(args.out, _json_text(result.to_json()))


def _cmd_uniformity(args, out: _Emitter) -> None:
    from .kernels import truncation_factor
    from .uniformity import sqrt2_scales, uniformity_identity_check

    measure = read_dataset(args.input)
    index = SpatialIndex(measure)
    try:
        spec = parse_kernel(args.kernel, measure.n)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if args.scales is None:
        lo, hi = 5.0 * measure.resolution, measure.diameter() / 4.0
    else:
        part = args.scales.split(":")
        if len(part) != 2:
            raise ConfigError("--scales must be LO:HI")
        try:
            lo, hi = float(part[0]), float(part[1])
        except ValueError:
            raise ConfigError(f"unparseable --scales {args.scales!r}") from None
    # the constancy identity only holds where the profile window is
    # unobstructed, so sample among centers that clear the boundary at the
    # largest scale; fall back to all points when none do.  Six profile
    # widths already cover everything above rounding for both families,
    # even when the hard truncation cut sits further out.
    margin = min(truncation_factor(spec), 6.0) * hi
    pool = np.flatnonzero(BoundaryGauge(measure).distance(measure.points)
                          >= margin)
    if pool.size == 0:
        pool = np.arange(measure.points.shape[0])
    rng = np.random.default_rng(args.seed)
    centers = np.sort(rng.choice(pool, size=min(args.centers, pool.size),
                                 replace=False))
    try:
        report = uniformity_identity_check(measure, index, spec, centers,
                                           sqrt2_scales(lo, hi))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out.add(args.out, _json_text(report.to_json()))


def _cmd_wavelet_check(args, out: _Emitter) -> None:
    from .wavelets import (ORIENTATIONS, cascade_tables, coefficient_rows,
                           decay_regressions, h_coefficient, quiet_offsets,
                           reconstruction_check)

    if args.n not in (1, 2):
        raise ConfigError("--n must be 1 or 2")
    try:
        family = cascade_tables(3, args.depth)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    rng = np.random.default_rng(args.seed)
    quiet_levels = tuple(range(-8, -2))
    worst, count = 0.0, 0
    for level in quiet_levels:
        for off in quiet_offsets(level, args.n, args.quiet_per_level, rng):
            for ori in ORIENTATIONS[args.n]:
                worst = max(worst, abs(h_coefficient(family, level, tuple(off), ori).value))
                count += 1
    decay = decay_regressions(family, args.n)
    payload = {
        "schema_version": 1,
        "n": args.n,
        "depth": args.depth,
        "moments": {str(m): family.moment(m) for m in range(3)},
        "psi_norm2": family.norm2(),
        "quiet_cubes": {"levels": list(quiet_levels), "count": count,
                        "max_abs_coeff": worst},
        "decay": decay.to_json(),
    }
    if args.n == 1:
        rec = reconstruction_check(family, [0.0, 0.5, -0.5, 1.5, -1.5, 3.0, -3.0])
        payload["reconstruction"] = rec.to_json()
    out.add(args.out, _json_text(payload))
    if args.csv:
        rows = coefficient_rows(family, args.n, range(args.csv_level_lo,
                                                      args.csv_level_hi + 1))
        lines = ["scale,offset,orientation,coefficient"]
        for c in rows:
            lines.append("%.17g,%s,%s,%.17g"
                         % (c.ell, ";".join(str(m) for m in c.offset),
                            "".join(str(b) for b in c.orientation), c.value))
        out.add(args.csv, "\n".join(lines) + "\n")


def _report_lines(name: str, payload: dict):
    """One markdown block and a list of (series, x, y) plot rows."""
    md, rows = [f"## {name}"], []
    if "sup_value" in payload:
        md.append("- multiscale square-sum report for `%s`" % payload["functional"])
        md.append("- sup V %.6g, slope %.4f, correlation %.4f"
                  % (payload["sup_value"], payload["slope"], payload["correlation"]))
        for row in payload["rows"]:
            rows.append(("carleson_V", row["radius"], row["value"]))
    elif "decay" in payload:
        dec = payload["decay"]
        md.append("- wavelet check, n=%d" % payload["n"])
        md.append("- quiet cubes: %d checked, max |a| %.3g"
                  % (payload["quiet_cubes"]["count"],
                     payload["quiet_cubes"]["max_abs_coeff"]))
        md.append("- coarse slope %.3f, fine slope %.3f"
                  % (dec["coarse"]["slope"], dec["fine"]["slope"]))
        for lv, pk in zip(dec["coarse"]["levels"], dec["coarse"]["max_abs_coeff"]):
            rows.append(("decay_coarse", 2.0 ** lv, pk))
        for lv, pk in zip(dec["fine"]["levels"], dec["fine"]["max_abs_coeff"]):
            rows.append(("decay_fine", 2.0 ** lv, pk))
        if "reconstruction" in payload:
            md.append("- reconstruction max error %.4f"
                      % payload["reconstruction"]["max_error"])
    elif "max_variation" in payload:
        md.append("- uniformity identity, kernel `%s`" % payload["kernel"])
        md.append("- c %.6g, max variation %.3g"
                  % (payload["c"], payload["max_variation"]))
    elif "defect" in payload:
        md.append("- constant-density defect at r %.6g: %.6g (c1 %.6g)"
                  % (payload["r"], payload["defect"], payload["c1"]))
    elif "cumulative" in payload:
        md.append("- flatness packing audit, root mass %.6g" % payload["root_mass"])
        for depth in sorted(payload["cumulative"], key=int):
            val = payload["cumulative"][depth]
            md.append("  - depth %s ratio %.6g" % (depth, val))
            rows.append(("packing_ratio", float(depth), val))
    else:
        md.append("- unrecognized artifact, keys: %s" % ", ".join(sorted(payload)))
    return md, rows


def _cmd_report(args, out: _Emitter) -> None:
    md = ["# rectiscan report", ""]
    plot = ["source,series,x,y"]
    for path in args.inputs:
        if not os.path.exists(path):
            raise ConfigError(f"input path {path!r} does not exist")
        try:
            with open(path) as fh:
                payload = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read {path!r}: {exc}") from None
        name = os.path.basename(path)
        block, rows = _report_lines(name, payload)
        md.extend(block)
        md.append("")
        for series, x, y in rows:
            plot.append("%s,%s,%.17g,%.17g" % (name, series, x, y))
    out.add(os.path.join(args.out_dir, "summary.md"), "\n".join(md) + "\n")
    out.add(os.path.join(args.out_dir, "plot.csv"), "\n".join(plot) + "\n")


# ---------------------------------------------------------------------------
# argument wiring


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rectiscan",
        description="multiscale flatness and density analysis of discrete measures")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a sampled geometry as a dataset CSV")
    p.add_argument("--kind", required=True, choices=KINDS)
    p.add_argument("--points", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_generate)

    def field_opts(p):
        p.add_argument("--input", required=True)
        p.add_argument("--functional", required=True, choices=TAGS)
        p.add_argument("--kernel", default=None)
        p.add_argument("--k", type=int, default=1)
        p.add_argument("--scales", default=None, metavar="LO:HI[:RATIO]")
        p.add_argument("--max-centers", type=int, default=5000)
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("analyze", help="tabulate a functional on a (center, scale) grid")
    field_opts(p)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_analyze)

    p = sub.add_parser("carleson", help="normalized square sums over balls")
    field_opts(p)
    p.add_argument("--ball", action="append", metavar="X,..,X:R")
    p.add_argument("--auto-balls", type=int, default=0)
    p.add_argument("--include-flagged", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_carleson)

    p = sub.add_parser("alpha-audit", help="flatness packing audit over the cube tree")
    p.add_argument("--input", required=True)
    p.add_argument("--jmax", type=int, default=5)
    p.add_argument("--depth", type=int, default=4)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_alpha_audit)

    p = sub.add_parser("wcd", help="best constant-density defect on one ball")
    p.add_argument("--input", required=True)
    p.add_argument("--center-index", type=int, default=None)
    p.add_argument("--center", default=None, metavar="X,..,X")
    p.add_argument("--radius", type=float, required=True)
    p.add_argument("--max-centers", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_wcd)

    p = sub.add_parser("uniformity", help="smoothed density constancy across scales")
    p.add_argument("--input", required=True)
    p.add_argument("--kernel", required=True)
    p.add_argument("--centers", type=int, default=50)
    p.add_argument("--scales", default=None, metavar="LO:HI")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_uniformity)

    p = sub.add_parser("wavelet-check", help="wavelet coefficient zero and decay checks")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--depth", type=int, default=12)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--quiet-per-level", type=int, default=100)
    p.add_argument("--csv", default=None)
    p.add_argument("--csv-level-lo", type=int, default=-4)
    p.add_argument("--csv-level-hi", type=int, default=2)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_wavelet_check)

    p = sub.add_parser("report", help="merge artifact JSONs into a markdown summary")
    p.add_argument("--inputs", nargs="+", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(handler=_cmd_report)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    out = _Emitter()
    try:
        args.handler(args, out)
        out.flush()
    except ConfigError as exc:
        print(f"rectiscan: config error: {exc}", file=sys.stderr)
        return 2
    except (DataError, OSError) as exc:
        print(f"rectiscan: data error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
