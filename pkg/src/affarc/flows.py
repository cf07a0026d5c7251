"""One-parameter groups f^t of near-identity affine maps.

Every non-degenerate map close to the identity falls into one of five types
according to the eigenvalues of its linear part and the position of its
translation relative to the eigen/root frame. For each type f^t has a closed
form and {f^t(x)} is an integral curve of an affine field x' = Bx + beta with
B = log A.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .affine import E2, AffineMap, eigen2, mat_exp, mat_log, opnorm
from .errors import TooFarFromIdentity, ZeroField

UNIT_TOL = 1e-7


class MapClass(str, enum.Enum):
    IDENTITY = "Identity"
    TRANSLATION = "Translation"
    TYPE1 = "Type1"
    TYPE2 = "Type2"
    TYPE3 = "Type3"
    TYPE4 = "Type4"
    TYPE5 = "Type5"


@dataclass(frozen=True, eq=False)
class FlowSpec:
    """Everything needed to evaluate f^t and its generating field.

    ``a`` and ``b_coef`` are the coordinates of the translation in the
    (e1, e2) frame; for Types 4/5 they are the root-frame coordinates usually
    written u, v. ``root_coefficient`` is c in (A - E) e2 = c e1.
    """

    map: AffineMap
    cls: MapClass
    B: np.ndarray
    beta: np.ndarray
    lambda1: complex
    lambda2: complex
    x0: Optional[np.ndarray] = None
    e1: Optional[np.ndarray] = None
    e2: Optional[np.ndarray] = None
    a: float = 0.0
    b_coef: float = 0.0
    root_coefficient: float = 0.0


@dataclass(frozen=True, eq=False)
class VectorField:
    B: np.ndarray
    beta: np.ndarray

    def __call__(self, x):
        return np.asarray(x, dtype=float) @ self.B.T + self.beta


@dataclass(frozen=True, eq=False)
class StationarySet:
    kind: str  # "point", "line" or "empty"
    point: Optional[np.ndarray] = None
    direction: Optional[np.ndarray] = None

    def distance_to(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if self.kind == "point":
            return float(np.hypot(*(x - self.point)))
        if self.kind == "line":
            d = x - self.point
            return float(abs(d[0] * self.direction[1] - d[1] * self.direction[0]))
        return math.inf


def _unipotent_frame(n: np.ndarray):
    col = n[:, 0] if np.hypot(*n[:, 0]) >= np.hypot(*n[:, 1]) else n[:, 1]
    e1 = col / np.hypot(*col)
    e2 = np.array([-e1[1], e1[0]])
    c = float(e1 @ (n @ e2))
    if c < 0:
        e2, c = -e2, -c
    return e1, e2, c


def classify(f: AffineMap, tol: float = UNIT_TOL, max_dist: float = 0.5) -> MapClass:
    """Sort f into Identity, Translation or Types 1-5.

    An eigenvalue counts as 1 when it is within ``tol`` of 1. Maps whose
    linear part is not unipotent must satisfy ||A - E|| <= max_dist, since
    their flow needs the logarithm series; unipotent maps have the exact
    logarithm A - E and are accepted at any distance.
    """
    n = f.linear - E2
    if opnorm(n) <= tol:
        return MapClass.IDENTITY if np.hypot(*f.translation) <= tol else MapClass.TRANSLATION
    spec = eigen2(f.linear)
    lam1, lam2 = spec.values
    near1 = [abs(lam1 - 1) < tol, abs(lam2 - 1) < tol]
    if all(near1):
        _, e2, _ = _unipotent_frame(n)
        return MapClass.TYPE5 if abs(f.translation @ e2) > tol else MapClass.TYPE4
    if opnorm(n) > max_dist:
        raise TooFarFromIdentity(f"||A - E|| = {float(opnorm(n)):.4g} exceeds {max_dist}")
    if not spec.real or not any(near1):
        return MapClass.TYPE1
    _, _, bc = _eigen_frame(f, spec, near1)
    return MapClass.TYPE3 if abs(bc) > tol else MapClass.TYPE2


def _eigen_frame(f, spec, near1):
    k = 0 if not near1[0] else 1
    e1 = spec.vectors[:, k]
    e2 = spec.vectors[:, 1 - k]
    a, bc = np.linalg.solve(np.column_stack([e1, e2]), f.translation)
    return (k, e1, e2), float(a), float(bc)


def flow_spec(f: AffineMap, tol: float = UNIT_TOL, max_dist: float = 0.5) -> FlowSpec:
    cls = classify(f, tol, max_dist)
    A, b = f.linear, f.translation
    if cls is MapClass.IDENTITY:
        raise ValueError("the identity has no flow spec")
    if cls is MapClass.TRANSLATION:
        return FlowSpec(f, cls, np.zeros((2, 2)), b.copy(), 1.0, 1.0)
    if cls in (MapClass.TYPE4, MapClass.TYPE5):
        B = A - E2
        e1, e2, c = _unipotent_frame(B)
        beta = (E2 - 0.5 * B) @ b
        return FlowSpec(f, cls, B, beta, 1.0, 1.0, e1=e1, e2=e2,
                        a=float(b @ e1), b_coef=float(b @ e2), root_coefficient=c)
    spec = eigen2(A)
    B = mat_log(A)
    if cls is MapClass.TYPE1:
        x0 = np.linalg.solve(E2 - A, b)
        return FlowSpec(f, cls, B, -B @ x0, spec.values[0], spec.values[1], x0=x0,
                        e1=None if spec.vectors is None else spec.vectors[:, 0],
                        e2=None if spec.vectors is None else spec.vectors[:, 1])
    near1 = [abs(v - 1) < tol for v in spec.values]
    (k, e1, e2), a, bc = _eigen_frame(f, spec, near1)
    lam1 = spec.values[k].real
    beta = a * math.log(lam1) / (lam1 - 1.0) * e1 + bc * e2
    return FlowSpec(f, cls, B, beta, lam1, spec.values[1 - k].real,
                    e1=e1, e2=e2, a=a, b_coef=bc)


def power(f: AffineMap, t: float, tol: float = UNIT_TOL, max_dist: float = 0.5) -> AffineMap:
    if classify(f, tol, max_dist) is MapClass.IDENTITY:
        return AffineMap.identity()
    return spec_power(flow_spec(f, tol, max_dist), t)


def spec_power(spec: FlowSpec, t: float) -> AffineMap:
    """f^t from a precomputed spec."""
    cls, b = spec.cls, spec.map.translation
    if cls is MapClass.TRANSLATION:
        return AffineMap(E2, t * b)
    if cls in (MapClass.TYPE4, MapClass.TYPE5):
        B = spec.B
        return AffineMap(E2 + t * B, t * b + 0.5 * t * (t - 1.0) * (B @ b))
    et = mat_exp(spec.B * t)
    if cls is MapClass.TYPE1:
        return AffineMap(et, spec.x0 - et @ spec.x0)
    lam = spec.lambda1
    shift = spec.a * (lam ** t - 1.0) / (lam - 1.0) * spec.e1 + spec.b_coef * t * spec.e2
    return AffineMap(et, shift)


def vector_field(spec: FlowSpec) -> VectorField:
    return VectorField(np.array(spec.B, dtype=float), np.array(spec.beta, dtype=float))


def stationary_set(spec: FlowSpec) -> StationarySet:
    cls = spec.cls
    if cls is MapClass.TYPE1:
        return StationarySet("point", spec.x0)
    if cls is MapClass.TYPE2:
        return StationarySet("line", spec.a / (1.0 - spec.lambda1) * spec.e1, spec.e2)
    if cls is MapClass.TYPE4:
        # (A - E)(xi e1 + eta e2) = eta c e1 must cancel the u e1 translation
        return StationarySet("line", -(spec.a / spec.root_coefficient) * spec.e2, spec.e1)
    return StationarySet("empty")


def _sin_angle(u, v) -> float:
    return abs(u[0] * v[1] - u[1] * v[0]) / (np.hypot(*u) * np.hypot(*v))


def min_speed(spec: FlowSpec) -> float:
    """Infimum of ||Bx + beta|| over the plane."""
    cls = spec.cls
    if cls is MapClass.TRANSLATION:
        return float(np.hypot(*spec.beta))
    if cls in (MapClass.TYPE3, MapClass.TYPE5):
        return abs(spec.b_coef) * float(np.hypot(*spec.e2)) * _sin_angle(spec.e1, spec.e2)
    return 0.0


def normalize_field(field: VectorField, disc_radius: float = 1.0, samples: int = 4096):
    """Rescale the field so that its maximum speed on the closed disc is 1.

    ||Bx + beta|| is convex, so the maximum sits on the boundary circle; it is
    located on a sample grid and polished with a bounded scalar search.
    Returns ``(normalized_field, m)``.
    """
    theta = np.linspace(0.0, 2 * math.pi, samples, endpoint=False)
    circle = disc_radius * np.column_stack([np.cos(theta), np.sin(theta)])
    speeds = np.hypot(*field(circle).T)
    k = int(np.argmax(speeds))
    step = 2 * math.pi / samples

    def neg_speed(th):
        x = disc_radius * np.array([math.cos(th), math.sin(th)])
        return -float(np.hypot(*field(x)))

    res = minimize_scalar(neg_speed, bounds=(theta[k] - step, theta[k] + step),
                          method="bounded", options={"xatol": 1e-12})
    m = max(float(speeds[k]), -float(res.fun))
    if m < 1e-14:
        raise ZeroField("field vanishes on the disc")
    return VectorField(field.B / m, field.beta / m), m


def integral_curve(spec: FlowSpec, x_start, t_min: float, t_max: float, samples: int) -> np.ndarray:
    """Points f^t(x_start) on a uniform t grid."""
    x_start = np.asarray(x_start, dtype=float)
    ts = np.linspace(t_min, t_max, samples)
    return np.array([spec_power(spec, t)(x_start) for t in ts])
