"""Vectorized point/segment/polyline distance primitives."""
from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree


def point_segment_distance(p, a, b) -> np.ndarray:
    """Distance from points p to segments [a, b] (broadcasting over rows)."""
    p, a, b = (np.asarray(v, dtype=float) for v in (p, a, b))
    ab = b - a
    den = np.sum(ab * ab, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(den > 0, np.sum((p - a) * ab, axis=-1) / den, 0.0)
    t = np.clip(t, 0.0, 1.0)
    proj = a + t[..., None] * ab
    return np.hypot(*(p - proj).T) if p.ndim > 1 or a.ndim > 1 else float(np.hypot(*(p - proj)))


def _cross(u, v):
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def segment_segment_distance(a1, b1, a2, b2) -> np.ndarray:
    """Distance between segments [a1,b1] and [a2,b2], row-wise."""
    a1, b1, a2, b2 = (np.atleast_2d(np.asarray(v, dtype=float)) for v in (a1, b1, a2, b2))
    d1, d2 = b1 - a1, b2 - a2
    o1 = _cross(d1, a2 - a1)
    o2 = _cross(d1, b2 - a1)
    o3 = _cross(d2, a1 - a2)
    o4 = _cross(d2, b1 - a2)
    crossing = (np.sign(o1) * np.sign(o2) < 0) & (np.sign(o3) * np.sign(o4) < 0)
    d = np.minimum.reduce([
        point_segment_distance(a1, a2, b2),
        point_segment_distance(b1, a2, b2),
        point_segment_distance(a2, a1, b1),
        point_segment_distance(b2, a1, b1),
    ])
    return np.where(crossing, 0.0, d)


def _segments(poly: np.ndarray):
    poly = np.asarray(poly, dtype=float)
    if len(poly) == 1:
        return poly, poly
    return poly[:-1], poly[1:]


class SegmentIndex:
    """KD-tree over the segment midpoints of a fixed polyline, for repeated queries."""

    def __init__(self, poly: np.ndarray):
        self.a, self.b = _segments(poly)
        self.half = 0.5 * np.hypot(*(self.b - self.a).T)
        self.tree = cKDTree(0.5 * (self.a + self.b))
        self.vertices = cKDTree(np.asarray(poly, dtype=float))

    def close_pairs(self, p: np.ndarray, tol: float):
        pa, pb = _segments(p)
        pm = 0.5 * (pa + pb)
        radius = 0.5 * np.hypot(*(pb - pa).T) + float(self.half.max()) + tol
        cand = self.tree.query_ball_point(pm, radius)
        ii = np.repeat(np.arange(len(pm)), [len(c) for c in cand])
        if len(ii) == 0:
            return np.empty(0, int), np.empty(0, int), np.empty(0)
        jj = np.concatenate([np.asarray(c, dtype=int) for c in cand])
        d = segment_segment_distance(pa[ii], pb[ii], self.a[jj], self.b[jj])
        keep = d <= tol
        return ii[keep], jj[keep], d[keep]

    def within(self, p: np.ndarray, tol: float) -> bool:
        # a close vertex pair settles it without any segment tests
        d, _ = self.vertices.query(np.asarray(p, dtype=float), distance_upper_bound=tol)
        if np.any(np.isfinite(d)):
            return True
        return len(self.close_pairs(p, tol)[0]) > 0


def close_segment_pairs(p: np.ndarray, q: np.ndarray, tol: float):
    """Index pairs (i, j) of segments of polylines p and q within distance tol.

    Candidates come from a KD-tree over segment midpoints; the final test is
    exact.
    """
    return SegmentIndex(q).close_pairs(p, tol)


def polylines_within(p: np.ndarray, q: np.ndarray, tol: float) -> bool:
    return len(close_segment_pairs(p, q, tol)[0]) > 0


def polyline_min_distance(p: np.ndarray, q: np.ndarray) -> float:
    """Exact minimum distance between two polylines."""
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    # a vertex pair bounds the answer from above; refine among candidates within it
    dv, _ = cKDTree(q).query(p)
    bound = float(dv.min())
    _, _, d = close_segment_pairs(p, q, bound)
    return float(d.min()) if len(d) else bound


def point_polyline_distance(x, poly: np.ndarray) -> float:
    a, b = _segments(poly)
    return float(np.min(point_segment_distance(np.asarray(x, dtype=float)[None, :], a, b)))


def points_polyline_distance(xs: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Distance from each point to a polyline."""
    xs = np.asarray(xs, dtype=float)
    a, b = _segments(poly)
    # nearest vertex gives an upper bound; only segments within it can do better
    tree = cKDTree(np.asarray(poly, dtype=float))
    dv, _ = tree.query(xs)
    mids = 0.5 * (a + b)
    half = 0.5 * np.hypot(*(b - a).T)
    mtree = cKDTree(mids)
    out = dv.copy()
    cand = mtree.query_ball_point(xs, dv + float(half.max()) + 1e-15)
    for k, c in enumerate(cand):
        if c:
            c = np.asarray(c)
            out[k] = min(out[k], float(np.min(point_segment_distance(xs[k][None, :], a[c], b[c]))))
    return out


def locate_on_polyline(x, poly: np.ndarray):
    """Closest point of a polyline to x as ``(segment_index, fraction, distance)``."""
    a, b = _segments(poly)
    x = np.asarray(x, dtype=float)
    ab = b - a
    den = np.sum(ab * ab, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(den > 0, np.sum((x - a) * ab, axis=1) / den, 0.0)
    t = np.clip(t, 0.0, 1.0)
    d = np.hypot(*(x - (a + t[:, None] * ab)).T)
    k = int(np.argmin(d))
    return k, float(t[k]), float(d[k])


def line_polyline_distance(point, direction, poly: np.ndarray) -> float:
    """Distance between an infinite line and a polyline."""
    poly = np.asarray(poly, dtype=float)
    n = np.array([-direction[1], direction[0]], dtype=float)
    n /= np.hypot(*n)
    s = (poly - np.asarray(point, dtype=float)) @ n
    if np.any(s <= 0) and np.any(s >= 0):
        return 0.0
    return float(np.min(np.abs(s)))


def self_close_pairs(poly: np.ndarray, tol: float):
    """Non-adjacent segment pairs (i < j - 1) of one polyline within tol."""
    ii, jj, d = close_segment_pairs(poly, poly, tol)
    keep = jj > ii + 1
    return ii[keep], jj[keep]
