"""Command-line front end; every subcommand prints a JSON report."""

import argparse
import csv
import json
import re
import sys

import numpy as np

from . import __version__
from .bodies import CONFIG_SCHEMA, catalog, load_body, lookup
from .certifier import (
    THREADS_ENV,
    CertifyParams,
    Status,
    certify_four_sections,
    certify_two_sections,
    find_elliptic_planes,
    report_header,
    sphere_specialization,
)
from .curvature import (
    CurvaturePair,
    euler_curvature,
    match_in_three_directions,
    principal_curvatures,
    section_curvature_fd,
)
from .errors import GeometryError, ParseError, RankDeficientError
from .fitting import (
    Condition,
    ellipse_area,
    fit_conic,
    fit_conic_lsq,
    fit_quadric,
    fit_quadric_lsq,
    is_ellipse,
)
from .kernel import Line, Plane, classify_conic, classify_quadric, ellipsoid_geometry
from .linesys import (
    LineSystem,
    constant_field,
    find_intersecting_partner,
    inward_field,
    normal_field,
    outward_from_system,
    verify_outward,
)
from .sections import extract_section, pencil_plane, polygon_area

CSV_COLUMNS = ("idx", "u", "v", "x", "y", "z")

_TERM = re.compile(r"([+-]?)(\d*\.?\d*(?:[eE][+-]?\d+)?)\*?([xyz])")


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# flag parsing


def parse_plane(text):
    """``ax+by+cz=d`` with any subset of the three terms, e.g. ``z=0.5`` or ``x-2y=1``."""
    s = text.replace(" ", "")
    if s.count("=") != 1:
        raise UsageError(f"plane {text!r}: expected one '='")
    lhs, rhs = s.split("=")
    n = np.zeros(3)
    pos = 0
    for m in _TERM.finditer(lhs):
        if m.start() != pos or (pos > 0 and not m.group(1)):
            raise UsageError(f"plane {text!r}: cannot parse left-hand side")
        coef = float(m.group(2)) if m.group(2) else 1.0
        n["xyz".index(m.group(3))] += -coef if m.group(1) == "-" else coef
        pos = m.end()
    if pos != len(lhs) or not lhs:
        raise UsageError(f"plane {text!r}: cannot parse left-hand side")
    try:
        d = float(rhs)
    except ValueError:
        raise UsageError(f"plane {text!r}: right-hand side must be a number") from None
    if not np.any(n):
        raise UsageError(f"plane {text!r}: zero normal")
    return Plane(n, d)


def parse_vector(text, dim=3):
    try:
        v = np.array([float(t) for t in text.split(",")])
    except ValueError:
        raise UsageError(f"bad vector {text!r}") from None
    if v.shape != (dim,):
        raise UsageError(f"expected {dim} comma-separated numbers, got {text!r}")
    return v


def parse_line(text):
    """``px,py,pz:ux,uy,uz``."""
    if text.count(":") != 1:
        raise UsageError(f"line {text!r}: expected 'px,py,pz:ux,uy,uz'")
    p, u = text.split(":")
    u = parse_vector(u)
    if not np.any(u):
        raise UsageError("line direction is zero")
    return Line(parse_vector(p), u)


def parse_pair(text):
    """Curvature pair ``k1,k2,t0``."""
    k1, k2, t0 = parse_vector(text)
    return CurvaturePair(k1, k2, t0)


def body_from_args(args):
    src = args.body
    if src.startswith("catalog:"):
        name = src.split(":", 1)[1]
        params = {}
        for key in ("a", "b", "c", "r", "p"):
            val = getattr(args, key, None)
            if val is not None:
                params[key] = int(val) if key == "p" else val
        for key in ("rotvec", "center"):
            val = getattr(args, key, None)
            if val is not None:
                params[key] = tuple(parse_vector(val))
        return lookup(name, **params)
    return load_body(src)


def read_points(path, dim):
    """Rows of a CSV file; a header naming ``u,v`` or ``x,y,z`` selects those columns."""
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    if not rows:
        raise UsageError(f"{path}: no points")
    cols = list(range(dim))
    try:
        float(rows[0][0])
    except ValueError:
        header = [h.strip() for h in rows.pop(0)]
        want = ["u", "v"] if dim == 2 else ["x", "y", "z"]
        if all(w in header for w in want):
            cols = [header.index(w) for w in want]
    try:
        pts = np.array([[float(r[c]) for c in cols] for r in rows])
    except (ValueError, IndexError):
        raise UsageError(f"{path}: expected {dim} numeric columns") from None
    return pts


def write_curve_csv(curve, path):
    P = curve.points3d
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for i, (uv, x) in enumerate(zip(curve.pts, P)):
            w.writerow([i] + [f"{v:.17g}" for v in (*uv, *x)])


def certify_params(args):
    return CertifyParams(
        n_points=args.n_points, alpha=getattr(args, "alpha", 0.3),
        alpha_area=getattr(args, "alpha_area", 1e-2), ellipse_tol=args.ellipse_tol,
        n_sweep=args.n_sweep, merge_tol=args.merge_tol, certify_tol=args.certify_tol,
        axis_tol=args.axis_tol, n_global=args.n_global, layout=getattr(args, "layout", "generic"),
        seed=args.seed, workers=args.threads,
    )


# --------------------------------------------------------------------------
# subcommands


def cmd_catalog(args):
    if args.dump:
        if not args.body:
            raise UsageError("--dump needs --body")
        return {"config": body_from_args(args).config()}
    return {"bodies": catalog(), "schema": CONFIG_SCHEMA}


def cmd_section(args):
    body = body_from_args(args)
    if (args.plane is None) == (args.line is None):
        raise UsageError("give exactly one of --plane or --line")
    if args.line is not None and args.sweep:
        axis = parse_line(args.line)
        found = find_elliptic_planes(body, axis, args.ellipse_tol, args.sweep, args.samples)
        return {"axis": {"point": axis.a.tolist(), "direction": axis.u.tolist()},
                "elliptic_planes": [{"theta": e.theta, "normal": e.plane.n.tolist(), "d": e.plane.d,
                                     "conic": e.conic.c.tolist(), "area": e.area, "residual": e.residual}
                                    for e in found]}
    H = parse_plane(args.plane) if args.plane else pencil_plane(parse_line(args.line), args.theta)
    curve = extract_section(body, H, args.samples)
    test = is_ellipse(curve, args.ellipse_tol)
    fit = fit_conic_lsq(curve)
    out = {
        "plane": {"normal": H.n.tolist(), "d": H.d},
        "samples": len(curve),
        "conic": fit.coeffs.c.tolist(),
        "conic_class": classify_conic(fit.coeffs).value,
        "sampson_rms": fit.residual,
        "relative_residual": test.residual,
        "is_ellipse": test.is_ellipse,
        "area": test.area if test.is_ellipse else None,
        "polygon_area": polygon_area(curve.pts),
    }
    if args.csv:
        write_curve_csv(curve, args.csv)
        out["csv"] = args.csv
    if args.figure:
        from .plotting import plot_section

        out["figure"] = plot_section(curve, fit.coeffs, args.figure, title=args.plane or "pencil plane")
    return out


def _fit_report(kind, pts, exact_n):
    if len(pts) < exact_n:
        raise RankDeficientError(f"{len(pts)} points cannot determine a {kind} ({exact_n} needed)",
                                 condition_gap=0.0)
    if len(pts) == exact_n:
        fitter = fit_conic if kind == "conic" else fit_quadric
        coeffs = fitter([Condition.point_on(p) for p in pts])
        rep = {"method": "exact", "max_row_residual": float(np.max(np.abs(coeffs(pts))))}
    else:
        fit = (fit_conic_lsq if kind == "conic" else fit_quadric_lsq)(pts)
        coeffs = fit.coeffs
        rep = {"method": "least-squares", "sampson_rms": fit.residual, "condition_gap": fit.condition_gap}
    return coeffs, rep


def cmd_fit_conic(args):
    pts = read_points(args.points, 2)
    conic, rep = _fit_report("conic", pts, 5)
    cls = classify_conic(conic)
    rep.update({"n_points": len(pts), "conic": conic.c.tolist(), "class": cls.value})
    if cls.value == "ELLIPSE":
        rep["area"] = ellipse_area(conic)
    return rep


def cmd_fit_quadric(args):
    pts = read_points(args.points, 3)
    quadric, rep = _fit_report("quadric", pts, 9)
    cls = classify_quadric(quadric)
    rep.update({"n_points": len(pts), "quadric": quadric.q.tolist(), "class": cls.value})
    if cls.value == "ELLIPSOID":
        geo = ellipsoid_geometry(quadric)
        rep.update({"center": geo.center.tolist(), "axes": geo.axes.tolist()})
    return rep


def cmd_curvature(args):
    body = body_from_args(args)
    if (args.point is None) == (args.direction is None):
        raise UsageError("give exactly one of --point or --direction")
    if args.point is not None:
        p = parse_vector(args.point)
    else:
        from .bodies import boundary_hit

        p = boundary_hit(body, body.interior, parse_vector(args.direction)).p
    cp = principal_curvatures(body, p)
    out = {"point": p.tolist(), "normal": body.normal(p).tolist(), "k1": cp.k1, "k2": cp.k2, "t0": cp.t0}
    if args.theta:
        thetas = parse_floats(args.theta)
        out["sections"] = [{"theta": t, "euler": float(euler_curvature(cp, t)),
                            "finite_difference": section_curvature_fd(body, p, t)} for t in thetas]
    return out


def parse_floats(text):
    try:
        return [float(t) for t in text.split(",")]
    except ValueError:
        raise UsageError(f"bad number list {text!r}") from None


def cmd_lemma1(args):
    body = body_from_args(args)
    system = LineSystem.diametral(body)
    u = parse_vector(args.u)
    part = find_intersecting_partner(system, u, args.tol, args.n_sweep)
    Lu = system.at(u)
    return {"u": (u / np.linalg.norm(u)).tolist(), "line_u": {"point": Lu.a.tolist(), "direction": Lu.u.tolist()},
            "v": part.v.tolist(), "line_v": {"point": part.line.a.tolist(), "direction": part.line.u.tolist()},
            "distance": part.distance, "common_point": part.point.tolist(),
            "common_point_interior": bool(body.g(part.point) < 0)}


def cmd_lemma2(args):
    A, B = parse_pair(args.pair_a), parse_pair(args.pair_b)
    dirs = parse_floats(args.dirs)
    if len(dirs) != 3:
        raise UsageError("--dirs needs exactly three angles")
    res = match_in_three_directions(A, B, dirs, args.tol)
    out = {"status": res.status.value, "difference": res.difference.tolist(),
           "max_difference": res.max_difference}
    if not res.agree:
        out["witness_direction"] = res.witness
    if args.figure:
        from .plotting import plot_curvature_difference

        out["figure"] = plot_curvature_difference(A, B, dirs, args.figure)
    return out


def _sample_dirs(n, seed):
    from .certifier import sample_directions

    return sample_directions(n, seed)


def cmd_outward(args):
    body = body_from_args(args)
    dirs = _sample_dirs(args.n, args.seed)
    if args.field == "normal":
        field = normal_field(body, dirs)
    elif args.field == "inward":
        field = inward_field(body, dirs)
    elif args.field == "constant":
        field = constant_field(body, dirs, parse_vector(args.v))
    else:
        field = outward_from_system(body, LineSystem.diametral(body), dirs)
    rep = verify_outward(body, field, args.tol)
    return rep.to_dict()


def _certify(args, fn, extra):
    body = body_from_args(args)
    params = certify_params(args)
    verdict = fn(body, *extra(body, params), params=params)
    out = verdict.to_dict()
    if verdict.status is Status.ELLIPSOID:
        out["sphere"] = sphere_specialization(verdict, axis_tol=params.axis_tol)
    if args.figure:
        from .plotting import plot_verdict

        out["figure"] = plot_verdict(verdict, args.figure)
    return out


def cmd_certify2(args):
    def extra(body, params):
        if args.field == "normal":
            return (normal_field(body, _sample_dirs(params.n_points, params.seed)), args.alpha)
        return (LineSystem.diametral(body), args.alpha)

    if args.field == "normal":
        print("note: normal-section certification relies on a result stated without proof in the source",
              file=sys.stderr)
    return _certify(args, certify_two_sections, extra)


def cmd_certify4(args):
    return _certify(args, certify_four_sections, lambda body, params: (args.alpha_area,))


# --------------------------------------------------------------------------
# parser


def _body_flags(p, required=True):
    p.add_argument("--body", required=required,
                   help="catalog:NAME (with --a/--b/--c/--r/--p/--rotvec/--center) or a JSON config path")
    for k in ("a", "b", "c", "r"):
        p.add_argument(f"--{k}", type=float)
    p.add_argument("--p", type=int, help="superellipsoid exponent")
    p.add_argument("--rotvec", help="rotation vector rx,ry,rz")
    p.add_argument("--center", help="center cx,cy,cz")


def _certify_flags(p):
    p.add_argument("--n-points", type=int, default=64)
    p.add_argument("--n-sweep", type=int, default=6)
    p.add_argument("--n-global", type=int, default=2000)
    p.add_argument("--ellipse-tol", type=float, default=1e-6)
    p.add_argument("--merge-tol", type=float, default=1e-7)
    p.add_argument("--certify-tol", type=float, default=1e-7)
    p.add_argument("--axis-tol", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=0, help=f"worker threads (default: ${THREADS_ENV} or 1)")
    p.add_argument("--expect", choices=["ellipsoid"], help="exit 1 unless the verdict is ELLIPSOID")
    p.add_argument("--figure", help="write a residual figure (PNG) to this path")


def build_parser():
    ap = argparse.ArgumentParser(prog="ellipsect", description="Ellipsoid recognition from plane sections.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write the report here instead of stdout")
    sub = ap.add_subparsers(dest="command", required=True)
    _add = sub.add_parser

    def add_parser(name, **kw):
        return _add(name, parents=[common], **kw)

    sub.add_parser = add_parser

    p = sub.add_parser("catalog", help="list built-in bodies or dump a body config")
    _body_flags(p, required=False)
    p.add_argument("--dump", action="store_true")
    p.set_defaults(func=cmd_catalog)

    p = sub.add_parser("section", help="sample and fit a plane section")
    _body_flags(p)
    p.add_argument("--plane", help="ax+by+cz=d")
    p.add_argument("--line", help="pencil axis px,py,pz:ux,uy,uz (with --theta or --sweep)")
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--sweep", type=int, default=0, help="list elliptic planes among N pencil angles")
    p.add_argument("--samples", type=int, default=256)
    p.add_argument("--ellipse-tol", type=float, default=1e-6)
    p.add_argument("--csv", help=f"write samples ({','.join(CSV_COLUMNS)})")
    p.add_argument("--figure")
    p.set_defaults(func=cmd_section)

    for name, func, what in (("fit-conic", cmd_fit_conic, "u,v"), ("fit-quadric", cmd_fit_quadric, "x,y,z")):
        p = sub.add_parser(name, help=f"fit through {what} points (exact at the minimal count)")
        p.add_argument("--points", required=True, help=f"CSV of {what} rows (header optional)")
        p.set_defaults(func=func)

    p = sub.add_parser("curvature", help="principal curvatures at a boundary point")
    _body_flags(p)
    p.add_argument("--point")
    p.add_argument("--direction", help="use the boundary hit along this direction from the interior point")
    p.add_argument("--theta", help="comma-separated tangent angles to compare with finite differences")
    p.set_defaults(func=cmd_curvature)

    p = sub.add_parser("lemma1", help="diametral line meeting the line of direction u")
    _body_flags(p)
    p.add_argument("--u", required=True)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--n-sweep", type=int, default=8)
    p.set_defaults(func=cmd_lemma1)

    p = sub.add_parser("lemma2", help="three-direction curvature agreement test")
    p.add_argument("--pair-a", required=True, help="k1,k2,t0")
    p.add_argument("--pair-b", required=True, help="k1,k2,t0")
    p.add_argument("--dirs", required=True, help="three tangent angles")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--figure")
    p.set_defaults(func=cmd_lemma2)

    p = sub.add_parser("outward", help="verify an outward field")
    _body_flags(p)
    p.add_argument("--field", choices=["normal", "inward", "constant", "diametral"], default="normal")
    p.add_argument("--v", default="0,0,1", help="vector of the constant field")
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_outward)

    p = sub.add_parser("certify2", help="certify via two sections along outward lines")
    _body_flags(p)
    _certify_flags(p)
    p.add_argument("--field", choices=["diametral", "normal"], default="diametral")
    p.add_argument("--alpha", type=float, default=0.3)
    p.set_defaults(func=cmd_certify2)

    p = sub.add_parser("certify4", help="certify via four sections through each point")
    _body_flags(p)
    _certify_flags(p)
    p.add_argument("--alpha-area", type=float, default=1e-2)
    p.add_argument("--layout", choices=["generic", "normal", "mixed"], default="generic")
    p.set_defaults(func=cmd_certify4)
    return ap


def _check_positive(args):
    for key, val in vars(args).items():
        if (key.endswith("_tol") or key == "tol" or key in ("alpha", "alpha_area")) and val is not None and val <= 0:
            raise UsageError(f"--{key.replace('_', '-')} must be positive")
    for key in ("samples", "n_points", "n_sweep", "n_global", "n"):
        if getattr(args, key, 1) is not None and getattr(args, key, 1) < 1:
            raise UsageError(f"--{key.replace('_', '-')} must be at least 1")


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code:
            print(CONFIG_SCHEMA, file=sys.stderr)
            return 2
        return 0
    flags = {k: v for k, v in vars(args).items() if k not in ("func", "command")}
    try:
        _check_positive(args)
        body_part = args.func(args)
    except (UsageError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(CONFIG_SCHEMA, file=sys.stderr)
        return 2
    except GeometryError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return 2
    report = report_header(args.command, flags, getattr(args, "seed", None))
    report.update(body_part)
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    if getattr(args, "expect", None) == "ellipsoid" and report.get("status") != Status.ELLIPSOID.value:
        return 1
    return 0


def main():
    sys.exit(run())
