"""Command-line interface: ``affsphere <command> [options]``.

Exit status 0 means every check passed, 1 means a check failed (or the
characterization was rejected) and 2 means the input could not be used.
"""
from __future__ import annotations

import argparse
import csv
import sys
import time

import numpy as np

from . import __version__
from .calabi import CompositionSpec, closed_form_invariants, closed_form_tensors
from .catalog import FlatHypersphere, catalog, flat_closed_forms
from .characterize import DecompositionData, characterize, sample_blocks
from .errors import AffsphereError, ManifestError
from .geometry import point_invariants
from .io import DEFAULT_COUNT, Manifest, default_tolerance, dumps, load_manifest

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def _parse_point(text: str) -> np.ndarray:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ManifestError(f"cannot parse point {text!r}; expected comma separated numbers") from None
    if not vals:
        raise ManifestError("empty point")
    return np.array(vals)


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _points(manifest: Manifest, args) -> tuple:
    """Evaluation points with the seed used (None for explicit points)."""
    if getattr(args, "samples", None) is None and getattr(args, "seed", None) is None and manifest.points is not None:
        return manifest.sample_points(), None
    seed = manifest.seed if args.seed is None else args.seed
    count = manifest.count if args.samples is None else args.samples
    return manifest.sample_points(count=count, seed=seed), seed


def _tol(manifest: Manifest | None, args) -> float:
    if args.tol is not None:
        return float(args.tol)
    if manifest is not None:
        return manifest.tolerance()
    return default_tolerance()


def _invariants_dict(inv) -> dict:
    return {
        "point": inv.point,
        "x": inv.x,
        "g": inv.g,
        "xi": inv.xi,
        "B": inv.B,
        "L1": inv.L1,
        "A": inv.A,
        "R": inv.R,
        "chi": inv.chi,
        "J": inv.J,
        "detH": inv.detH,
        "residuals": inv.residuals,
    }


# ---------------------------------------------------------------------------
# commands


def cmd_invariants(args) -> int:
    m = load_manifest(args.spec)
    spec = m.spec
    if args.point:
        point = _parse_point(args.point)
    elif m.points is not None:
        point = m.sample_points()[0]
    else:
        point = m.sample_points(count=1)[0]
    inv = point_invariants(spec, point)
    _emit(dumps({"command": "invariants", "spec": spec.to_dict(), "invariants": _invariants_dict(inv)}), args.out)
    return EXIT_OK


def _closed_form_checks(spec, inv) -> dict:
    out = {}
    if isinstance(spec, CompositionSpec):
        g, A, L1 = closed_form_tensors(spec, inv.point)
        out["metric"] = float(np.max(np.abs(inv.g - g)) / np.max(np.abs(g)))
        out["cubic"] = float(np.max(np.abs(inv.A - A)) / (1.0 + np.max(np.abs(A))))
        out["L1"] = abs(inv.L1 - L1) / abs(L1)
    if isinstance(spec, FlatHypersphere):
        cf = flat_closed_forms(spec.dim, spec.c0)
        out["flat_metric"] = float(np.max(np.abs(inv.g - cf.g)) / np.max(np.abs(cf.g)))
        out["flat_cubic"] = float(np.max(np.abs(inv.A - cf.A)))
        out["flat_L1"] = abs(inv.L1 - cf.L1) / abs(cf.L1)
        if inv.J is not None:
            out["flat_pick"] = abs(inv.J + inv.L1)
    if spec.is_hyperbolic_sphere:
        out["sphere_shape"] = float(np.max(np.abs(inv.B - inv.L1 * np.eye(inv.n))))
        out["center"] = float(np.max(np.abs(inv.xi + inv.L1 * inv.x)))
    return out


def cmd_verify(args) -> int:
    t0 = time.perf_counter()
    m = load_manifest(args.spec)
    spec = m.spec
    tol = _tol(m, args)
    pts, seed = _points(m, args)
    per_point, summary = [], {}
    for p in pts:
        inv = point_invariants(spec, p)
        res = dict(inv.residuals)
        if not spec.is_hyperbolic_sphere:
            res.pop("gauss_sphere", None)
        res.update(_closed_form_checks(spec, inv))
        per_point.append({"point": p, "L1": inv.L1, "J": inv.J, "residuals": res})
        for k, v in res.items():
            summary[k] = max(summary.get(k, 0.0), float(v))
    limits = {k: m.tolerance(k, args.tol) for k in summary}
    failures = sorted(k for k, v in summary.items() if not v <= limits[k])
    report = {
        "command": "verify",
        "spec": spec.to_dict(),
        "seed": seed,
        "tolerance": tol,
        "points": per_point,
        "summary": summary,
        "failures": failures,
        "verdict": "PASS" if not failures else "FAIL",
        "wall_time": time.perf_counter() - t0,
    }
    _emit(dumps(report), args.out)
    for k in failures:
        print(f"check failed: {k} = {summary[k]:.3e} > {limits[k]:.1e}", file=sys.stderr)
    return EXIT_OK if not failures else EXIT_FAIL


def _table_csv(cfi) -> str:
    lines = ["section,family,alpha,indices,value,multiplies"]
    for i, gi in enumerate(np.diag(cfi.g_lambda_mu), 1):
        lines.append(f"metric,g_lambda_lambda,,{i} {i},{gi:.17g},")
    for a, cf in enumerate(cfi.factor_conformal, 1):
        lines.append(f"metric,factor_conformal,{a},,{cf:.17g},factor_metric")
    for rec in cfi.A_table:
        idx = " ".join(str(i) for i in rec["indices"])
        lines.append(f"cubic,{rec['family']},{rec.get('alpha', '')},{idx},{rec['value']:.17g},{rec['multiplies'] or ''}")
    lines.append(f"scalar,C,,,{cfi.C:.17g},")
    lines.append(f"scalar,L1,,,{cfi.L1:.17g},")
    return "\n".join(lines) + "\n"


def cmd_compose_table(args) -> int:
    m = load_manifest(args.spec)
    spec = m.spec
    if not isinstance(spec, CompositionSpec):
        raise ManifestError(f"compose-table needs a composition or flat spec, got {spec.to_dict()['kind']}")
    cfi = closed_form_invariants(spec)
    if args.format == "csv":
        _emit(_table_csv(cfi), args.out)
    else:
        _emit(dumps({"command": "compose-table", "spec": spec.to_dict(), "table": cfi.to_dict()}), args.out)
    return EXIT_OK


def cmd_characterize(args) -> int:
    t0 = time.perf_counter()
    if (args.spec is None) == (args.data is None):
        raise ManifestError("characterize needs exactly one of --spec or --data")
    m = None
    if args.data is not None:
        data = DecompositionData.load(args.data)
        source = {"data": args.data}
        seed = None
    else:
        m = load_manifest(args.spec)
        pts, seed = _points(m, args)
        data = sample_blocks(m.spec, pts)
        source = {"spec": m.spec.to_dict(), "seed": seed, "points": pts}
    tol = _tol(m, args)
    if args.dump_data:
        with open(args.dump_data, "w") as fh:
            fh.write(dumps(data.to_dict()))
    rep = characterize(data, tol=tol)
    report = {"command": "characterize", **source, "tolerance": tol, "report": rep.to_dict(),
              "verdict": rep.verdict, "wall_time": time.perf_counter() - t0}
    _emit(dumps(report), args.out)
    if not rep.accepted:
        print("REJECT: " + ", ".join(rep.reasons), file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_catalog(args) -> int:
    _emit(dumps({"command": "catalog", "entries": catalog()}), args.out)
    return EXIT_OK


def cmd_sample_surface(args) -> int:
    m = load_manifest(args.spec)
    spec = m.spec
    if spec.dim != 2:
        raise ManifestError(f"sample-surface needs a 2-dimensional spec, got dimension {spec.dim}")
    if args.grid < 2:
        raise ManifestError("--grid must be at least 2")
    box = m.box
    lo, hi = (-float(box), float(box)) if np.isscalar(box) else (float(box[0]), float(box[1]))
    ticks = np.linspace(lo, hi, args.grid)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["u1", "u2", "x1", "x2", "x3"])
        for u1 in ticks:
            for u2 in ticks:
                x = spec([u1, u2])
                w.writerow([format(v, ".17g") for v in (u1, u2, *x)])
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="affsphere", description="Equiaffine invariants and Calabi compositions.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, spec_required=True):
        p.add_argument("--spec", required=spec_required, help="manifest JSON file")
        p.add_argument("--out", help="write output here instead of standard output")

    p = sub.add_parser("invariants", help="all invariants at one point")
    common(p)
    p.add_argument("--point", help="comma separated chart coordinates")
    p.set_defaults(func=cmd_invariants)

    p = sub.add_parser("verify", help="residual suite and closed-form comparison at sample points")
    common(p)
    p.add_argument("--samples", type=int, help=f"number of random points (default {DEFAULT_COUNT})")
    p.add_argument("--seed", type=int, help="random seed")
    p.add_argument("--tol", type=float, help="tolerance for every check")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("compose-table", help="closed-form tables of a composition")
    common(p)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_compose_table)

    p = sub.add_parser("characterize", help="decide whether block data comes from a composition")
    common(p, spec_required=False)
    p.add_argument("--data", help="block dataset JSON file")
    p.add_argument("--samples", type=int, help="number of random points")
    p.add_argument("--seed", type=int, help="random seed")
    p.add_argument("--tol", type=float, help="residual tolerance")
    p.add_argument("--dump-data", help="also write the sampled block dataset here")
    p.set_defaults(func=cmd_characterize)

    p = sub.add_parser("catalog", help="list built-in hyperspheres")
    p.add_argument("--out")
    p.set_defaults(func=cmd_catalog)

    p = sub.add_parser("sample-surface", help="CSV mesh of a 2-dimensional spec")
    p.add_argument("--spec", required=True)
    p.add_argument("--grid", type=int, default=21)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample_surface)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    if getattr(args, "samples", None) is not None and args.samples < 1:
        print("error: --samples must be positive", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except (AffsphereError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
