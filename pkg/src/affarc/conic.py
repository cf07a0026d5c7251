"""Least-squares conic fitting and the line / parabola test for arcs."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .attractor import ArcApprox, point_set_diameter
from .errors import DegenerateInput

PARABOLA_TOL = 1e-6
LINE_TOL = 1e-9
DISCRIMINANT_TOL = 1e-6
DEGENERACY_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class ConicFit:
    """Ax^2 + Bxy + Cy^2 + Dx + Ey + F = 0 with a unit coefficient vector."""

    coefficients: np.ndarray
    residual: float
    kind: str  # line, parabola, ellipse, hyperbola or indeterminate
    normalized: np.ndarray  # coefficients in the centred, rescaled frame

    def to_dict(self) -> dict:
        return {"coefficients": self.coefficients.tolist(), "residual": self.residual, "kind": self.kind}

    def axis(self) -> np.ndarray:
        """Unit direction annihilated by the quadratic part (the parabola axis)."""
        a, b, c = self.normalized[:3]
        q = np.array([[a, b / 2], [b / 2, c]])
        w, v = np.linalg.eigh(q)
        return v[:, int(np.argmin(np.abs(w)))]


def _design(u: np.ndarray) -> np.ndarray:
    x, y = u[:, 0], u[:, 1]
    return np.column_stack([x * x, x * y, y * y, x, y, np.ones_like(x)])


def _sign_fix(v: np.ndarray) -> np.ndarray:
    k = int(np.flatnonzero(np.abs(v) > 1e-12)[0])
    return -v if v[k] < 0 else v


def fit_conic(points, tol: float = PARABOLA_TOL) -> ConicFit:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 6:
        raise DegenerateInput("need at least 6 planar points")
    mu = pts.mean(axis=0)
    s = float(np.sqrt(np.mean(np.sum((pts - mu) ** 2, axis=1))))
    if s == 0.0:
        raise DegenerateInput("all points coincide")
    u = (pts - mu) / s
    _, sv, vt = np.linalg.svd(_design(u), full_matrices=False)
    q = _sign_fix(vt[-1])
    residual = float(sv[-1] / np.sqrt(len(pts)))

    # substitute u = (x - mx)/s, v = (y - my)/s
    a, b, c, d, e, f = q
    mx, my = mu
    s2 = s * s
    coef = np.array([
        a / s2, b / s2, c / s2,
        (-2 * a * mx - b * my) / s2 + d / s,
        (-2 * c * my - b * mx) / s2 + e / s,
        (a * mx * mx + b * mx * my + c * my * my) / s2 - (d * mx + e * my) / s + f,
    ])
    coef = _sign_fix(coef / np.linalg.norm(coef))

    centred = np.linalg.svd(u, compute_uv=False)
    if centred[1] <= LINE_TOL * centred[0]:
        kind = "line"
    elif residual > tol:
        kind = "indeterminate"
    else:
        disc = b * b - 4 * a * c
        m3 = np.array([[a, b / 2, d / 2], [b / 2, c, e / 2], [d / 2, e / 2, f]])
        if abs(np.linalg.det(m3)) <= DEGENERACY_TOL:
            kind = "indeterminate"  # line pairs are not arcs of a single conic
        elif abs(disc) <= DISCRIMINANT_TOL:
            kind = "parabola"
        else:
            kind = "ellipse" if disc < 0 else "hyperbola"
    return ConicFit(coef, residual, kind, q)


def classify_arc(arc, tol: float = PARABOLA_TOL, line_tol: float = LINE_TOL) -> str:
    """Return "line-segment", "parabolic-segment" or "neither"."""
    pts = arc.points if isinstance(arc, ArcApprox) else np.asarray(arc, dtype=float)
    if len(pts) < 6:
        raise DegenerateInput("need at least 6 arc points")
    diam = point_set_diameter(pts)
    chord = pts[-1] - pts[0]
    length = float(np.hypot(*chord))
    if length > 0:
        rel = pts - pts[0]
        off = np.abs(chord[0] * rel[:, 1] - chord[1] * rel[:, 0]) / length
        if float(off.max()) <= line_tol * diam:
            return "line-segment"
    fit = fit_conic(pts, tol)
    if fit.kind != "parabola":
        return "neither"
    # one branch between the end parameters: the coordinate across the axis is monotone
    axis = fit.axis()
    across = pts @ np.array([-axis[1], axis[0]])
    steps = np.diff(across)
    slack = 1e-12 * max(1.0, float(np.ptp(across)))
    if np.all(steps >= -slack) or np.all(steps <= slack):
        return "parabolic-segment"
    return "neither"
