"""Command-line front end: ``breakrenorm <subcommand> [flags]``.

Every subcommand writes rows to ``--out`` (stdout by default) as CSV or
JSONL.  Each row carries ``schema`` plus the tolerances it was computed
under.  Exit status: 0 ok, 1 domain error, 2 numerical failure, 64 usage.
"""
import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import kernels as K
from ._pool import pmap
from .errors import DomainError, NumericalError, RenormError
from .mobius import canonical_cone_vector, in_cone, validate_params
from .renorm import (A_MIN, B_MIN, DEFAULT_R_CAP, INF, ContinuedFraction, Status, T_orbit,
                     classify, duality_heights, dual_inverse_R, involution_I, renormalize_R,
                     rotation_number)

SCHEMA = 1
EXIT_DOMAIN = 1
EXIT_NUMERICAL = 2
EXIT_USAGE = 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _word(text):
    try:
        w = tuple(int(x) for x in text.replace(" ", "").split(",") if x)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad word {text!r}")
    if not w or min(w) < 1:
        raise argparse.ArgumentTypeError("word entries must be positive integers")
    return w


def _bounds(text):
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad bounds {text!r}")
    if len(vals) != 4 or not (vals[0] < vals[1] and vals[2] < vals[3]):
        raise argparse.ArgumentTypeError("bounds are a_lo,a_hi,v_lo,v_hi with lo < hi")
    return vals


# -- output ---------------------------------------------------------------------

def _fmt_csv(x):
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return ""
        return "%.17g" % x
    if isinstance(x, (list, tuple)):
        return " ".join(_fmt_csv(y) for y in x)
    return str(x)


def _json_safe(x):
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.ndarray):
        return [_json_safe(y) for y in x.tolist()]
    if isinstance(x, (list, tuple)):
        return [_json_safe(y) for y in x]
    if isinstance(x, dict):
        return {k: _json_safe(v) for k, v in x.items()}
    return x


def render(rows, fmt):
    buf = io.StringIO()
    if fmt == "jsonl":
        for r in rows:
            buf.write(json.dumps(_json_safe(r), allow_nan=False) + "\n")
        return buf.getvalue()
    cols = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_fmt_csv(r.get(k)) for k in cols])
    return buf.getvalue()


def _emit(rows, args, tol):
    stamp = {"schema": SCHEMA}
    stamp.update(tol)
    rows = [dict(stamp, **r) for r in rows]
    text = render(rows, args.format)
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)


def _params(args):
    if args.a is None or args.v is None:
        raise UsageError("--a and --v are required")
    return validate_params(args.a, args.v, args.c)


def _cf_row(cf: ContinuedFraction):
    lo, hi = cf.interval()
    return {"cf": list(cf.entries), "rho_lo": lo, "rho_hi": hi, "halted": cf.halted}


# -- subcommands ----------------------------------------------------------------

def cmd_rotnum(args):
    p = _params(args)
    cf = rotation_number(p, args.depth, args.r_cap, strict=False)
    row = {"a": p.a, "v": p.v, "c": p.c}
    row.update(_cf_row(cf))
    return [row], {"depth": args.depth, "r_cap": args.r_cap}


def cmd_renorm_orbit(args):
    p = _params(args)
    pts, hs = T_orbit(p, args.depth, args.r_cap)
    rows = []
    for j, q in enumerate(pts):
        rows.append({"step": j, "a": q.a, "v": q.v, "c": q.c,
                     "heights": hs[2 * j: 2 * j + 2] if j < len(pts) - 1 else None})
    return rows, {"r_cap": args.r_cap}


def raster_regions(c, grid, bounds=None, r_cap=DEFAULT_R_CAP, depth=12):
    """Classify cell centres of a grid x grid raster of the (a, v) plane.

    Rows run over v (increasing), columns over a; cells are emitted in
    row-major order.
    """
    if isinstance(grid, int):
        grid = (grid, grid)
    na, nv = grid
    if na < 2 or nv < 2:
        raise UsageError("grid must be at least 2x2")
    if bounds is None:
        bounds = (0.0, c, -1.0, c + 1.0)
    a0, a1, v0, v1 = bounds
    A = a0 + (np.arange(na) + 0.5) * (a1 - a0) / na
    Vs = v0 + (np.arange(nv) + 0.5) * (v1 - v0) / nv

    def row(i):
        v = float(Vs[i])
        E, cnt, st = K.cf_batch(A.copy(), np.full(na, v), c, depth, r_cap, A_MIN, B_MIN)
        out = []
        for j in range(na):
            a = float(A[j])
            rc = classify(a, v, c, r_cap)
            ent = [INF if r == K.HEIGHT_INF else int(r) for r in E[j, :cnt[j]]]
            rho = None
            if rc.status in (Status.RENORMALIZABLE, Status.NONRENORMALIZABLE) and ent:
                rho = ContinuedFraction(tuple(ent), int(st[j]) == K.CF_CAP, r_cap).value
            out.append({"i": i, "j": j, "a": a, "v": v, "class": rc.status.value,
                        "height": rc.k, "rho": rho, "note": rc.note or None})
        return out
    return [r for rs in pmap(row, range(nv)) for r in rs]


def cmd_regions(args):
    rows = raster_regions(args.c, args.grid, args.bounds, args.r_cap, args.depth)
    return rows, {"band": 1e-3, "r_cap": args.r_cap, "depth": args.depth}


def cmd_periodic(args):
    from .horseshoe import find_periodic_point
    from .hyperbolicity import eigensplit
    word = args.word or (1, 1)
    pp = find_periodic_point(args.c, word, tol=args.tol, r_cap=args.r_cap)
    rec = eigensplit(pp.jacobian, base=pp.params)
    cf = rotation_number(pp.params, 2 * len(word) * 5, args.r_cap, strict=False)
    return [{"c": args.c, "word": word, "a": pp.params.a, "v": pp.params.v,
             "residual": pp.residual, "lambda_u": float(rec.lambda_u),
             "lambda_s": float(rec.lambda_s), "hyperbolic": bool(rec.hyperbolic),
             "cf": list(cf.entries)}], {"tol": args.tol, "r_cap": args.r_cap}


def cmd_curve(args):
    from .horseshoe import trace_stable_curve
    word = args.word or (1, 1)
    cur = trace_stable_curve(args.c, word, depth=args.depth, n_samples=args.grid, tol=args.tol,
                             r_cap=args.r_cap)
    gaps = dict(cur.gaps)
    rows = []
    for k, (s, (a, v)) in enumerate(zip(cur.anchors, cur.vertices)):
        rows.append({"k": k, "c": args.c, "word": word, "anchor": float(s),
                     "a": float(a), "v": float(v), "gap": gaps.get(k)})
    return rows, {"tol": args.tol, "depth": args.depth}


def _window(args):
    from .horseshoe import SymbolWindow
    if args.window:
        try:
            return SymbolWindow.parse(args.window)
        except ValueError as e:
            raise UsageError(str(e))
    return SymbolWindow.periodic(args.word or (1, 1))


def cmd_attractor(args):
    from .horseshoe import attractor_point, transversality_angle
    w = _window(args)
    ap = attractor_point(args.c, w)
    row = {"c": args.c, "window": str(w), "a": ap.params.a, "v": ap.params.v,
           "method": ap.method, "residual": ap.residual, "error": ap.error}
    if ap.method == "CurveIntersection":
        ang = transversality_angle(args.c, w, ap=ap if args.c > 1 else None)
        row.update(angle=ang.angle, angle_error=ang.error)
    return [row], {"tol": 1e-13}


def cmd_hyperbolicity(args):
    from .hyperbolicity import orbit_splitting
    w = _window(args)
    sp = orbit_splitting(args.c, w, k=args.depth)
    rows = []
    for j, q in enumerate(sp.points):
        rows.append({"j": j, "a": q.a, "v": q.v,
                     "eu_a": float(sp.e_u[j][0]), "eu_v": float(sp.e_u[j][1]),
                     "es_a": float(sp.e_s[j][0]), "es_v": float(sp.e_s[j][1]),
                     "expansion": sp.expansion[j] if j < len(sp.expansion) else None,
                     "contraction": sp.contraction[j] if j < len(sp.contraction) else None,
                     "k0": sp.k0, "lam": sp.lam, "min_angle": sp.min_angle})
    return rows, {"margin": 1e-3}


def cmd_duality_check(args):
    p = _params(args)
    q = involution_I(p, check=False)
    back = involution_I(q, check=False)
    row = {"a": p.a, "v": p.v, "c": p.c, "dual_a": q.a, "dual_v": q.v,
           "involution_residual": math.hypot(back.a - p.a, back.v - p.v),
           "inverse_residual": None, "height": None, "dual_height": None, "note": None}
    try:
        # R^-1 through I only recovers points with a backward extension
        s = renormalize_R(p, args.r_cap)
        pre = dual_inverse_R(s.new_params, s.heights[0], args.r_cap)
        row["inverse_residual"] = math.hypot(pre.a - p.a, pre.v - p.v)
        row["height"], row["dual_height"] = duality_heights(p, args.r_cap)
    except RenormError as e:
        row["note"] = f"{type(e).__name__}: {e}"
    return [row], {"r_cap": args.r_cap}


def cmd_cone_check(args):
    p = _params(args)
    vb = canonical_cone_vector(p)
    verdict = in_cone(p, vb, args.grid)
    return [{"a": p.a, "v": p.v, "c": p.c, "tangent_a": vb.alpha, "tangent_v": vb.nu,
             "status": verdict.status.value, "infimum": verdict.infimum,
             "argmin": verdict.argmin}], {"grid": args.grid, "margin": 1e-10}


def cmd_converge(args):
    from .smooth import convergence_report, make_conjugated_map
    p = _params(args)
    rep = convergence_report(make_conjugated_map(p, args.eps), args.depth)
    rows = []
    for m, cm, alt in zip(rep.fits, rep.commutation, rep.c_alternation):
        rows.append({"n": m.level, "c_n": m.c, "a_n": m.a, "b_n": m.b, "v_n": m.v,
                     "dist_C0": m.dist_C0, "dist_C2approx": m.dist_C2approx,
                     "xi_scaled": m.xi_scaled, "commutation": cm, "break_sq": alt[2],
                     "lambda_hat": rep.lambda_hat, "lambda_stderr": rep.fit.stderr,
                     "monotone": rep.monotone})
    return rows, {"epsilon": args.eps, "grid": 256, "fd_step": 1e-3}


def cmd_apriori_scan(args):
    from .hyperbolicity import apriori_scan
    sc = apriori_scan(args.c, args.samples, args.seed, args.r_cap)
    return [{"c": args.c, "min_lambda": sc.min_lambda, "delta": sc.delta,
             "accepted": sc.accepted, "rejected": sc.rejected}], {"seed": args.seed,
                                                                  "r_cap": args.r_cap}


COMMANDS = {
    "rotnum": cmd_rotnum,
    "renorm-orbit": cmd_renorm_orbit,
    "regions": cmd_regions,
    "periodic": cmd_periodic,
    "curve": cmd_curve,
    "attractor": cmd_attractor,
    "hyperbolicity": cmd_hyperbolicity,
    "duality-check": cmd_duality_check,
    "cone-check": cmd_cone_check,
    "converge": cmd_converge,
    "apriori-scan": cmd_apriori_scan,
}

_DEPTH = {"rotnum": 30, "renorm-orbit": 5, "regions": 12, "curve": 20, "hyperbolicity": 10,
          "converge": 8}
_GRID = {"regions": 200, "curve": 16, "cone-check": 2001}


def build_parser():
    ap = _Parser(prog="breakrenorm", description="Renormalisation of Moebius break maps.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--c", type=float, required=True)
        sp.add_argument("--a", type=float)
        sp.add_argument("--v", type=float)
        sp.add_argument("--word", type=_word)
        sp.add_argument("--window")
        sp.add_argument("--depth", type=int, default=_DEPTH.get(name, 20))
        sp.add_argument("--r-cap", type=int, default=DEFAULT_R_CAP)
        sp.add_argument("--grid", type=int, default=_GRID.get(name, 200))
        sp.add_argument("--tol", type=float, default=1e-10 if name == "periodic" else 1e-12)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out")
        sp.add_argument("--format", choices=("csv", "jsonl"),
                        default="jsonl" if name == "periodic" else "csv")
        if name == "regions":
            sp.add_argument("--bounds", type=_bounds)
        if name == "converge":
            sp.add_argument("--eps", type=float, default=0.3)
        if name == "apriori-scan":
            sp.add_argument("--samples", type=int, default=10_000)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        rows, tol = COMMANDS[args.command](args)
        _emit(rows, args, tol)
    except DomainError as e:
        print(f"breakrenorm: domain error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_DOMAIN
    except (NumericalError, RenormError) as e:
        print(f"breakrenorm: numerical failure: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (UsageError, ValueError) as e:
        # ValueError comes from malformed words and windows
        print(f"breakrenorm: usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    return 0


if __name__ == "__main__":
    sys.exit(main())
