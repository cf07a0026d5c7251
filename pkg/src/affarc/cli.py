"""Command-line front end.

Exit codes: 0 success, 1 other library error, 2 unreadable input,
3 not a zipper / not a Jordan arc, 4 map too far from the identity,
10 weak separation violated, 11 arc is a parabolic or straight segment,
12 pieces do not form a chain, 13 reducible system, 14 end neighbourhoods
cannot be separated, 15 partition pieces not covered exactly.
"""
from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

import numpy as np

from . import errors
from .affine import AffineMap
from .attractor import Zipper, arc_approx, build_arc
from .conic import classify_arc, fit_conic
from .flows import MapClass, classify, flow_spec, integral_curve, min_speed, stationary_set
from .multizipper import extract_multizipper
from .specfile import SpecError, load_spec, polyline_svg, write_csv
from .wsp import epsilon_net, reference_arc, wsp_check

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_PARSE = 2
EXIT_NOT_ZIPPER = 3
EXIT_TOO_FAR = 4
EXIT_VIOLATED = 10
EXIT_PARABOLIC = 11
EXIT_NOT_CHAIN = 12
EXIT_REDUCIBLE = 13
EXIT_CANNOT_SEPARATE = 14
EXIT_NO_COVER = 15

_CODES = [
    (SpecError, EXIT_PARSE),
    (errors.NotAZipper, EXIT_NOT_ZIPPER),
    (errors.NotJordan, EXIT_NOT_ZIPPER),
    (errors.TooFarFromIdentity, EXIT_TOO_FAR),
    (errors.IsParabolic, EXIT_PARABOLIC),
    (errors.NotAChain, EXIT_NOT_CHAIN),
    (errors.Reducible, EXIT_REDUCIBLE),
    (errors.CannotSeparate, EXIT_CANNOT_SEPARATE),
    (errors.NoCover, EXIT_NO_COVER),
    (errors.AmbiguousPlacement, EXIT_NO_COVER),
]


def _floats(text: str) -> list:
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError as exc:
        raise SpecError(f"cannot parse numbers from {text!r}") from exc


def parse_map_arg(text: str) -> AffineMap:
    """Six numbers a11 a12 b1 a21 a22 b2 (row-major 2x3), comma or space separated."""
    v = _floats(text)
    if len(v) != 6:
        raise SpecError("a map needs six coefficients: a11 a12 b1 a21 a22 b2")
    return AffineMap([[v[0], v[1]], [v[3], v[4]]], [v[2], v[5]])


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _arc_for(system, depth: int):
    if system.nodes is not None:
        return arc_approx(Zipper(system, system.nodes, system.signature), depth)
    return build_arc(system, depth)[0]


def cmd_generate(args) -> int:
    system = load_spec(args.spec)
    arc = _arc_for(system, args.depth)
    if args.format == "svg":
        _emit(polyline_svg(arc.points), args.out)
    else:
        if args.out:
            with open(args.out, "w") as fh:
                write_csv(arc.points, arc.params, fh)
        else:
            write_csv(arc.points, arc.params, sys.stdout)
    return EXIT_OK


def cmd_wsp(args) -> int:
    system = load_spec(args.spec)
    report = wsp_check(system, args.epsilon, args.depth, tol=args.tol)
    _emit(report.to_json() + "\n", args.out)
    return EXIT_VIOLATED if report.violated else EXIT_OK


def cmd_extract(args) -> int:
    system = load_spec(args.spec)
    result = extract_multizipper(system, depth=args.depth)
    _emit(result.graph.to_json() + "\n", args.out)
    return EXIT_OK


def _vec(v) -> Optional[list]:
    return None if v is None else [float(x) for x in np.real(v)]


def cmd_classify(args) -> int:
    f = parse_map_arg(args.map)
    if classify(f, max_dist=args.max_dist) is MapClass.IDENTITY:
        payload = {"class": MapClass.IDENTITY.value}
    else:
        spec = flow_spec(f, max_dist=args.max_dist)
        st = stationary_set(spec)
        payload = {
            "class": spec.cls.value,
            "B": spec.B.tolist(),
            "beta": _vec(spec.beta),
            "eigenvalues": [[complex(v).real, complex(v).imag] for v in (spec.lambda1, spec.lambda2)],
            "stationary": {"kind": st.kind, "point": _vec(st.point), "direction": _vec(st.direction)},
            "min_speed": min_speed(spec),
        }
        if spec.x0 is not None:
            payload["x0"] = _vec(spec.x0)
        if args.curve:
            start = _floats(args.curve)
            pts = integral_curve(spec, start, args.t_min, args.t_max, args.samples)
            if args.format == "svg" and args.out:
                with open(args.out, "w") as fh:
                    fh.write(polyline_svg(pts))
            else:
                payload["curve"] = pts.tolist()
    sys.stdout.write(json.dumps(payload, indent=2) + "\n")
    return EXIT_OK


def cmd_net(args) -> int:
    system = load_spec(args.spec)
    arc = reference_arc(system) if args.depth is None else _arc_for(system, args.depth)
    f = parse_map_arg(args.map)
    x = None if args.x is None else _floats(args.x)
    net = epsilon_net(f, arc, x, tol=args.tol)
    payload = {
        "N": net.N,
        "points": net.points.tolist(),
        "sigma_arcs": [[p.tolist(), q.tolist()] for p, q in net.sigma_arcs],
        "hausdorff": net.hausdorff_to(arc),
        "max_sigma_diameter": float(net.sigma_diameters(arc).max()),
    }
    _emit(json.dumps(payload, indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_detect(args) -> int:
    system = load_spec(args.spec)
    arc = _arc_for(system, args.depth)
    tol = 1e-6 if args.tol is None else args.tol
    fit = fit_conic(arc.points, tol)
    payload = {"verdict": classify_arc(arc, tol), **fit.to_dict()}
    _emit(json.dumps(payload, indent=2) + "\n", args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="affarc", description="Self-affine arcs: generation, separation, flows, multizippers.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write the arc polyline")
    g.add_argument("spec")
    g.add_argument("--depth", type=int, default=8)
    g.add_argument("--format", choices=("csv", "svg"), default="csv")
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    w = sub.add_parser("wsp", help="search the associated family for separation witnesses")
    w.add_argument("spec")
    w.add_argument("--epsilon", type=float, default=0.05)
    w.add_argument("--depth", type=int, default=10)
    w.add_argument("--tol", type=float)
    w.add_argument("--out")
    w.set_defaults(func=cmd_wsp)

    e = sub.add_parser("extract", help="build the multizipper graph")
    e.add_argument("spec")
    e.add_argument("--depth", type=int, default=10)
    e.add_argument("--out")
    e.set_defaults(func=cmd_extract)

    c = sub.add_parser("classify", help="type, generator and field of a near-identity map")
    c.add_argument("map", help="a11 a12 b1 a21 a22 b2")
    c.add_argument("--max-dist", type=float, default=0.5)
    c.add_argument("--curve", help="start point x,y of an integral curve")
    c.add_argument("--t-min", type=float, default=0.0)
    c.add_argument("--t-max", type=float, default=1.0)
    c.add_argument("--samples", type=int, default=101)
    c.add_argument("--format", choices=("json", "svg"), default="json")
    c.add_argument("--out")
    c.set_defaults(func=cmd_classify)

    n = sub.add_parser("net", help="epsilon-net of a near-identity map on the arc")
    n.add_argument("spec")
    n.add_argument("--map", required=True, help="a11 a12 b1 a21 a22 b2")
    n.add_argument("--x", help="base point x,y (default: start of the arc)")
    n.add_argument("--depth", type=int)
    n.add_argument("--tol", type=float)
    n.add_argument("--out")
    n.set_defaults(func=cmd_net)

    d = sub.add_parser("detect", help="line / parabola verdict for the arc")
    d.add_argument("spec")
    d.add_argument("--depth", type=int, default=8)
    d.add_argument("--tol", type=float)
    d.add_argument("--out")
    d.set_defaults(func=cmd_detect)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (errors.AffarcError, SpecError) as exc:
        print(f"affarc: {type(exc).__name__}: {exc}", file=sys.stderr)
        return next((c for cls, c in _CODES if isinstance(exc, cls)), EXIT_ERROR)


if __name__ == "__main__":
    sys.exit(main())
