"""JSON IFS spec files and CSV/SVG writers for polylines."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .affine import AffineMap
from .attractor import IfsSystem


class SpecError(ValueError):
    """The spec file is not valid JSON or does not describe an IFS."""


def parse_map(entry) -> AffineMap:
    try:
        lin = np.array(entry["linear"], dtype=float).reshape(2, 2)
        tr = np.array(entry.get("translation", [0.0, 0.0]), dtype=float).reshape(2)
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecError(f"bad map entry {entry!r}: {exc}") from exc
    return AffineMap(lin, tr)


def system_from_dict(data: dict) -> IfsSystem:
    if not isinstance(data, dict) or "maps" not in data:
        raise SpecError("spec needs a 'maps' list")
    maps = [parse_map(e) for e in data["maps"]]
    try:
        return IfsSystem(maps, nodes=data.get("nodes"), signature=data.get("signature"),
                         labels=None if data.get("labels") is None else tuple(data["labels"]))
    except ValueError as exc:
        raise SpecError(str(exc)) from exc


def load_spec(path) -> IfsSystem:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SpecError(f"cannot read {path}: {exc}") from exc
    return system_from_dict(data)


def system_to_dict(system: IfsSystem) -> dict:
    out = {"maps": [{"linear": f.linear.tolist(), "translation": f.translation.tolist()} for f in system.maps]}
    if system.nodes is not None:
        out["nodes"] = system.nodes.tolist()
    if system.signature is not None:
        out["signature"] = list(system.signature)
    if system.labels is not None:
        out["labels"] = list(system.labels)
    return out


def save_spec(system: IfsSystem, path) -> None:
    Path(path).write_text(json.dumps(system_to_dict(system), indent=2))


def fmt(x: float) -> str:
    return "%.17g" % x


def write_csv(points, params, stream) -> None:
    w = csv.writer(stream, lineterminator="\n")
    for (x, y), t in zip(points, params):
        w.writerow([fmt(x), fmt(y), fmt(t)])


def read_csv(path) -> tuple:
    rows = np.loadtxt(path, delimiter=",", ndmin=2)
    return rows[:, :2], rows[:, 2]


def polyline_svg(points, margin: float = 0.05, stroke: float = 0.002) -> str:
    """One path element in a viewBox fitted to the bounds with a relative margin."""
    pts = np.asarray(points, dtype=float)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = hi - lo
    size = float(max(span.max(), 1e-12))
    pad = margin * np.where(span > 0, span, size)
    x0, y0 = lo - pad
    w, h = span + 2 * pad
    # flip y so the picture reads with the y axis pointing up
    coords = [f"{fmt(x)},{fmt(2 * y0 + h - y)}" for x, y in pts]
    d = "M " + " L ".join(coords)
    return (f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{fmt(x0)} {fmt(y0)} {fmt(w)} {fmt(h)}">\n'
            f'<path d="{d}" fill="none" stroke="black" stroke-width="{fmt(stroke * size)}"/>\n</svg>\n')
