"""Plane affine maps f(x) = Ax + b and the 2x2 matrix functions they need.

Points are numpy arrays of shape ``(2,)`` (or ``(n, 2)`` for batches) and
matrices are ``(2, 2)`` arrays. Words over the symbol set ``{1, ..., m}``
are plain tuples of ints.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateMap, OutOfLogDomain

E2 = np.eye(2)

DET_TOL = 1e-12
LOG_MARGIN = 1e-3
DEFECTIVE_TOL = 1e-8


def _frozen(a, shape) -> np.ndarray:
    arr = np.array(a, dtype=float).reshape(shape)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"non-finite entries: {arr!r}")
    arr.setflags(write=False)
    return arr


def opnorm(m: np.ndarray) -> np.ndarray | float:
    """Spectral norm of a 2x2 matrix, vectorized over leading axes."""
    m = np.asarray(m, dtype=float)
    fro2 = np.sum(m * m, axis=(-2, -1))
    det = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    disc = np.sqrt(np.maximum(fro2 * fro2 - 4.0 * det * det, 0.0))
    return np.sqrt(0.5 * (fro2 + disc))


def singular_values(m: np.ndarray) -> tuple[float, float]:
    s = np.linalg.svd(np.asarray(m, dtype=float), compute_uv=False)
    return float(s[0]), float(s[1])


@dataclass(frozen=True, eq=False)
class AffineMap:
    """The map x -> linear @ x + translation."""

    linear: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "linear", _frozen(self.linear, (2, 2)))
        object.__setattr__(self, "translation", _frozen(self.translation, (2,)))

    @classmethod
    def identity(cls) -> "AffineMap":
        return cls(E2, np.zeros(2))

    @classmethod
    def from_coefficients(cls, a11, a12, a21, a22, b1, b2) -> "AffineMap":
        return cls([[a11, a12], [a21, a22]], [b1, b2])

    @classmethod
    def translation_by(cls, b) -> "AffineMap":
        return cls(E2, b)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return x @ self.linear.T + self.translation

    def __matmul__(self, other: "AffineMap") -> "AffineMap":
        return compose(self, other)

    def __repr__(self):
        (a, b), (c, d) = self.linear
        return f"AffineMap([[{a:.6g}, {b:.6g}], [{c:.6g}, {d:.6g}]], [{self.translation[0]:.6g}, {self.translation[1]:.6g}])"

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.linear))

    @property
    def lipschitz(self) -> float:
        return float(opnorm(self.linear))

    def is_contracting(self) -> bool:
        return self.lipschitz < 1.0

    def inverse(self) -> "AffineMap":
        return inverse(self)

    def coefficients(self) -> list[float]:
        """Row-major 2x3 coefficients ``[a11, a12, b1, a21, a22, b2]``."""
        (a, b), (c, d) = self.linear
        return [float(a), float(b), float(self.translation[0]),
                float(c), float(d), float(self.translation[1])]

    def allclose(self, other: "AffineMap", tol: float = 1e-12) -> bool:
        return (np.max(np.abs(self.linear - other.linear)) <= tol
                and np.max(np.abs(self.translation - other.translation)) <= tol)


def compose(f: AffineMap, g: AffineMap) -> AffineMap:
    """Return f o g."""
    return AffineMap(f.linear @ g.linear, f.linear @ g.translation + f.translation)


def compose_word(maps: Sequence[AffineMap], word: Sequence[int]) -> AffineMap:
    """S_w = S_{w1} o S_{w2} o ... o S_{wn} for a word of 1-based symbols."""
    lin = E2.copy()
    tr = np.zeros(2)
    for s in word:
        m = maps[s - 1]
        tr = lin @ m.translation + tr
        lin = lin @ m.linear
    return AffineMap(lin, tr)


def inverse(f: AffineMap) -> AffineMap:
    a = f.linear
    det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    if abs(det) < DET_TOL * max(np.sum(a * a), np.finfo(float).tiny):
        raise DegenerateMap(f"determinant {det:.3g} is numerically zero")
    inv = np.array([[a[1, 1], -a[0, 1]], [-a[1, 0], a[0, 0]]]) / det
    return AffineMap(inv, -inv @ f.translation)


def conjugate(f: AffineMap, g: AffineMap) -> AffineMap:
    """g^-1 o f o g."""
    return compose(inverse(g), compose(f, g))


def dist_to_identity(f: AffineMap) -> float:
    """max(||A - E||_2, ||b||_2)."""
    return max(float(opnorm(f.linear - E2)), float(np.hypot(*f.translation)))


@dataclass(frozen=True)
class Spectrum:
    """Eigen-data of a 2x2 real matrix.

    ``values`` are ordered by decreasing real part (then imaginary part).
    ``vectors`` holds unit eigenvectors as columns when both are real. In the
    defective case column 0 is the eigenvector e1 and column 1 is a unit root
    vector e2 with (A - lambda E) e2 = root_coefficient * e1, root_coefficient > 0.
    Eigenvalues closer than DEFECTIVE_TOL count as equal; if A is then within
    DEFECTIVE_TOL (relative to its largest entry, at least 1) of lambda E it is
    reported as scalar with the standard frame.
    """

    values: tuple[complex, complex]
    real: bool
    vectors: Optional[np.ndarray] = None
    defective: bool = False
    root_coefficient: float = 0.0


def _null_direction(m: np.ndarray) -> np.ndarray:
    """Unit vector spanning the kernel of a rank-1 2x2 matrix."""
    r = m[0] if np.hypot(*m[0]) >= np.hypot(*m[1]) else m[1]
    v = np.array([-r[1], r[0]])
    return _canonical_sign(v / np.hypot(*v))


def _canonical_sign(v: np.ndarray) -> np.ndarray:
    k = 0 if abs(v[0]) > 1e-14 else 1
    return -v if v[k] < 0 else v


def eigen2(a: np.ndarray) -> Spectrum:
    a = np.asarray(a, dtype=float)
    p, q, r, s = a[0, 0], a[0, 1], a[1, 0], a[1, 1]
    half_tr = 0.5 * (p + s)
    # (p - s)^2 + 4qr avoids the tr^2 - 4 det cancellation near double roots
    disc = 0.25 * (p - s) ** 2 + q * r
    scale = max(1.0, float(np.max(np.abs(a))))
    if disc < 0 and math.sqrt(-disc) >= 0.5 * DEFECTIVE_TOL:
        im = math.sqrt(-disc)
        return Spectrum((complex(half_tr, im), complex(half_tr, -im)), real=False)
    root = math.sqrt(max(disc, 0.0))
    if 2 * root < DEFECTIVE_TOL:
        lam = half_tr
        n = a - lam * E2
        if np.max(np.abs(n)) <= DEFECTIVE_TOL * scale:
            return Spectrum((complex(lam), complex(lam)), True, E2.copy())
        # defective: e1 spans the image of n, e2 is orthogonal with n e2 = c e1, c > 0
        col = n[:, 0] if np.hypot(*n[:, 0]) >= np.hypot(*n[:, 1]) else n[:, 1]
        e1 = _canonical_sign(col / np.hypot(*col))
        e2 = np.array([-e1[1], e1[0]])
        c = float(e1 @ (n @ e2))
        if c < 0:
            e2, c = -e2, -c
        return Spectrum((complex(lam), complex(lam)), True,
                        np.column_stack([e1, e2]), defective=True, root_coefficient=c)
    lam1, lam2 = half_tr + root, half_tr - root
    v1 = _null_direction(a - lam1 * E2)
    v2 = _null_direction(a - lam2 * E2)
    return Spectrum((complex(lam1), complex(lam2)), True, np.column_stack([v1, v2]))


def _sqrtm2(a: np.ndarray) -> np.ndarray:
    """Principal square root of a 2x2 matrix with spectrum in the right half-plane."""
    s = math.sqrt(np.linalg.det(a))
    t = math.sqrt(np.trace(a) + 2.0 * s)
    return (a + s * E2) / t


def mat_log(a: np.ndarray) -> np.ndarray:
    """Principal logarithm for ||A - E|| < 1.

    Unipotent and diagonal inputs use closed forms; otherwise inverse scaling
    and squaring brings A close to E before summing the Mercator series.
    """
    a = np.asarray(a, dtype=float)
    n = a - E2
    n2 = n @ n
    if np.max(np.abs(n2)) <= 1e-15 * max(1.0, float(np.max(np.abs(n))) ** 2):
        return n.copy()
    if opnorm(n) >= 1.0 - LOG_MARGIN:
        raise OutOfLogDomain(f"||A - E|| = {float(opnorm(n)):.4g} is outside the series domain")
    if a[0, 1] == 0.0 and a[1, 0] == 0.0:
        return np.diag([math.log(a[0, 0]), math.log(a[1, 1])])
    k = 0
    x = a
    while opnorm(x - E2) > 0.25:
        x = _sqrtm2(x)
        k += 1
    y = x - E2
    term = y.copy()
    out = np.zeros((2, 2))
    j = 1
    while True:
        out += term / j if j % 2 else -term / j
        term = term @ y
        j += 1
        if np.max(np.abs(term)) / j < 1e-17 or j > 200:
            break
    return out * (2.0 ** k)


def mat_exp(b: np.ndarray) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    norm = float(np.max(np.sum(np.abs(b), axis=1)))
    k = 0 if norm <= 0.5 else int(math.ceil(math.log2(norm / 0.5)))
    x = b / (2.0 ** k)
    out = E2.copy()
    term = E2.copy()
    for j in range(1, 30):
        term = term @ x / j
        out = out + term
        if np.max(np.abs(term)) < 1e-18:
            break
    for _ in range(k):
        out = out @ out
    return out


def fixed_set(f: AffineMap, tol: float = 1e-12):
    """Solve f(x) = x.

    Returns ``("point", p, None)``, ``("line", p, direction)``, ``("plane", 0, None)``
    or ``("empty", None, None)``.
    """
    m = f.linear - E2
    u, s, vt = np.linalg.svd(m)
    scale = max(1.0, float(np.max(np.abs(f.linear))))
    rhs = -f.translation
    if s[1] > tol * scale:
        return "point", np.linalg.solve(m, rhs), None
    if s[0] <= tol * scale:
        if np.hypot(*f.translation) <= tol * scale:
            return "plane", np.zeros(2), None
        return "empty", None, None
    # rank one: consistent iff rhs lies in the column space u[:, 0]
    resid = rhs - u[:, 0] * (u[:, 0] @ rhs)
    if np.hypot(*resid) > 1e3 * tol * max(1.0, float(np.hypot(*rhs))):
        return "empty", None, None
    p = vt[0] * ((u[:, 0] @ rhs) / s[0])
    return "line", p, vt[1]
