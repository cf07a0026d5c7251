"""Self-affine attractors as ordered polylines.

A zipper is an IFS together with nodes z_0..z_m such that each S_i sends the
end points {z_0, z_m} onto {z_{i-1}, z_i}; the orientation bit of S_i says
whether z_0 goes to z_{i-1} (0) or to z_i (1). Its attractor is then an arc
from z_0 to z_m, and the images of the end points under all words of length
d, listed in arc order, give an inscribed polyline.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import ConvexHull, QhullError, cKDTree

from .affine import AffineMap, compose_word, fixed_set
from .errors import EmptySet, NotAZipper, PointNotOnArc
from .geometry import locate_on_polyline, points_polyline_distance, self_close_pairs

MAX_DEPTH = 20


@dataclass(frozen=True, eq=False)
class IfsSystem:
    maps: tuple
    nodes: Optional[np.ndarray] = None
    signature: Optional[tuple] = None
    labels: Optional[tuple] = None

    def __post_init__(self):
        maps = tuple(self.maps)
        object.__setattr__(self, "maps", maps)
        if len(maps) < 2:
            raise ValueError("an IFS needs at least two maps")
        for k, f in enumerate(maps, 1):
            if not f.is_contracting():
                raise ValueError(f"map {k} is not contracting (Lipschitz {f.lipschitz:.4g})")
        for i, j in itertools.combinations(range(len(maps)), 2):
            if maps[i].allclose(maps[j], 1e-14):
                raise ValueError(f"maps {i + 1} and {j + 1} coincide")
        if self.nodes is not None:
            nodes = np.array(self.nodes, dtype=float)
            if nodes.shape != (len(maps) + 1, 2):
                raise ValueError(f"expected {len(maps) + 1} nodes, got {len(nodes)}")
            object.__setattr__(self, "nodes", nodes)

    @property
    def m(self) -> int:
        return len(self.maps)

    def word_map(self, word: Sequence[int]) -> AffineMap:
        return compose_word(self.maps, word)

    def permuted(self, order: Sequence[int]) -> "IfsSystem":
        """System with maps listed as ``[maps[k] for k in order]`` (0-based)."""
        labels = None if self.labels is None else tuple(self.labels[k] for k in order)
        return IfsSystem(tuple(self.maps[k] for k in order), labels=labels)

    def subsystem(self, drop: int) -> list:
        return [f for k, f in enumerate(self.maps) if k != drop]


@dataclass(frozen=True, eq=False)
class ArcApprox:
    """Ordered polyline on an arc with per-vertex words and parameters."""

    points: np.ndarray
    params: np.ndarray
    addresses: np.ndarray

    @property
    def a0(self) -> np.ndarray:
        return self.points[0]

    @property
    def a1(self) -> np.ndarray:
        return self.points[-1]

    @property
    def degenerate(self) -> bool:
        return len(self.points) < 2 or float(np.ptp(self.params)) == 0.0

    def __len__(self):
        return len(self.points)

    @cached_property
    def diameter(self) -> float:
        return point_set_diameter(self.points)

    def address(self, k: int) -> tuple:
        return tuple(int(s) for s in self.addresses[k])

    def transformed(self, f: AffineMap) -> "ArcApprox":
        return ArcApprox(f(self.points), self.params, self.addresses)


def point_set_diameter(points: np.ndarray) -> float:
    pts = np.asarray(points, dtype=float)
    if len(pts) < 2:
        return 0.0
    try:
        pts = pts[ConvexHull(pts).vertices]
    except (QhullError, ValueError):
        pass
    if len(pts) > 2000:
        pts = pts[np.linspace(0, len(pts) - 1, 2000).astype(int)]
    d = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt(np.max(np.sum(d * d, axis=-1))))


def _node_tol(points) -> float:
    return 1e-9 * max(1.0, float(np.max(np.abs(points))))


@dataclass(frozen=True, eq=False)
class Zipper:
    system: IfsSystem
    nodes: np.ndarray
    signature: Optional[tuple] = None

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        m = self.system.m
        if nodes.shape != (m + 1, 2):
            raise NotAZipper(f"a zipper with {m} maps needs {m + 1} nodes")
        object.__setattr__(self, "nodes", nodes)
        tol = _node_tol(nodes)
        z0, zm = nodes[0], nodes[-1]
        sig = []
        for i, f in enumerate(self.system.maps):
            fwd = max(np.hypot(*(f(z0) - nodes[i])), np.hypot(*(f(zm) - nodes[i + 1])))
            rev = max(np.hypot(*(f(z0) - nodes[i + 1])), np.hypot(*(f(zm) - nodes[i])))
            want = None if self.signature is None else int(self.signature[i])
            if fwd <= tol and want in (None, 0):
                sig.append(0)
            elif rev <= tol and want in (None, 1):
                sig.append(1)
            else:
                raise NotAZipper(f"map {i + 1} does not send the end nodes onto nodes {i}, {i + 1}")
        object.__setattr__(self, "signature", tuple(sig))

    @property
    def a0(self):
        return self.nodes[0]

    @property
    def a1(self):
        return self.nodes[-1]


def _expand_words(system: IfsSystem, signature, depth: int):
    """Composite maps of all words of a given length, listed in arc order."""
    m = system.m
    A = np.stack([f.linear for f in system.maps])
    b = np.stack([f.translation for f in system.maps])
    sig = np.asarray(signature, dtype=np.int8)
    lin = np.eye(2)[None]
    tr = np.zeros((1, 2))
    orient = np.zeros(1, dtype=np.int8)
    words = np.zeros((1, 0), dtype=np.int16)
    for _ in range(depth):
        n = len(lin)
        clin = np.einsum("nij,kjl->nkil", lin, A)
        ctr = np.einsum("nij,kj->nki", lin, b) + tr[:, None, :]
        cor = orient[:, None] ^ sig[None, :]
        cw = np.concatenate([np.repeat(words[:, None, :], m, axis=1),
                             np.broadcast_to(np.arange(1, m + 1, dtype=np.int16)[None, :, None], (n, m, 1))],
                            axis=2)
        rev = orient == 1
        for arr in (clin, ctr, cor, cw):
            arr[rev] = arr[rev][:, ::-1]
        lin = clin.reshape(n * m, 2, 2)
        tr = ctr.reshape(n * m, 2)
        orient = cor.reshape(n * m)
        words = cw.reshape(n * m, -1)
    return lin, tr, orient, words


def arc_approx(zipper: Zipper, depth: int) -> ArcApprox:
    """Inscribed polyline through the images of the end nodes under all words of length depth.

    Depth d >= 1 yields m**d + 1 points; depth 0 returns the node polyline,
    which coincides with depth 1.
    """
    if depth < 0 or depth > MAX_DEPTH:
        raise ValueError(f"depth must lie in [0, {MAX_DEPTH}]")
    m = zipper.system.m
    if depth == 0:
        addr = np.array([[k] for k in range(1, m + 1)] + [[m]], dtype=np.int16)
        return ArcApprox(zipper.nodes.copy(), np.arange(m + 1) / m, addr)
    lin, tr, orient, words = _expand_words(zipper.system, zipper.signature, depth)
    ends = np.stack([zipper.a0, zipper.a1])
    start_pts = np.einsum("nij,nj->ni", lin, ends[orient]) + tr
    end_pts = np.einsum("nij,nj->ni", lin, ends[1 - orient]) + tr
    gap = np.max(np.hypot(*(end_pts[:-1] - start_pts[1:]).T)) if len(lin) > 1 else 0.0
    if gap > _node_tol(zipper.nodes) * 10:
        raise NotAZipper(f"consecutive pieces do not join (gap {gap:.3g})")
    points = np.vstack([start_pts, end_pts[-1:]])
    addresses = np.vstack([words, words[-1:]])
    params = np.arange(len(points)) / float(m ** depth)
    return ArcApprox(points, params, addresses)


def index_point(zipper: Zipper, address: Sequence[int], iterations: int = 10_000) -> np.ndarray:
    """pi(address address address ...): iterate S_address from a0 to convergence."""
    g = zipper.system.word_map(address)
    x = zipper.a0.copy()
    tol = 1e-13 * max(1.0, float(np.max(np.abs(zipper.nodes))))
    for _ in range(iterations):
        y = g(x)
        if np.hypot(*(y - x)) < tol:
            return y
        x = y
    return x


def hausdorff_distance(a, b) -> float:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise EmptySet("Hausdorff distance needs two nonempty sets")
    dab, _ = cKDTree(b).query(a)
    dba, _ = cKDTree(a).query(b)
    return float(max(dab.max(), dba.max()))


def polyline_hausdorff(p, q) -> float:
    """Hausdorff distance between two polylines, measured from each vertex set to the other curve."""
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    return float(max(points_polyline_distance(p, q).max(), points_polyline_distance(q, p).max()))


def locate(arc: ArcApprox, x, tol: Optional[float] = None):
    """Continuous vertex index, parameter and distance of the arc point nearest x."""
    pts = arc.points
    if len(pts) == 1:
        d = float(np.hypot(*(np.asarray(x) - pts[0])))
        return 0.0, float(arc.params[0]), d
    k, t, d = locate_on_polyline(x, pts)
    if tol is not None and d > tol:
        raise PointNotOnArc(f"point {np.asarray(x)} is {d:.3g} away from the arc")
    s = k + t
    if abs(s - round(s)) < 1e-9:
        s = float(round(s))
    param = float(np.interp(s, np.arange(len(pts)), arc.params))
    return s, param, d


def subarc(arc: ArcApprox, p, q, tol: Optional[float] = None) -> ArcApprox:
    """The piece of the arc between p and q (both snapped onto the polyline)."""
    tol = 1e-6 * arc.diameter if tol is None else tol
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    sp, _, _ = locate(arc, p, tol)
    sq, _, _ = locate(arc, q, tol)
    if sp > sq:
        sp, sq, p, q = sq, sp, q, p
    idx = np.arange(len(arc.points))
    if sp == sq:
        k = int(round(sp))
        return ArcApprox(p[None, :], np.array([np.interp(sp, idx, arc.params)]), arc.addresses[k:k + 1])
    inner = idx[(idx > sp) & (idx < sq)]
    kp, kq = int(math.floor(sp)), min(int(math.ceil(sq)), len(idx) - 1)
    points = np.vstack([p, arc.points[inner], q])
    params = np.concatenate([[np.interp(sp, idx, arc.params)], arc.params[inner],
                             [np.interp(sq, idx, arc.params)]])
    addresses = np.vstack([arc.addresses[kp:kp + 1], arc.addresses[inner], arc.addresses[kq:kq + 1]])
    return ArcApprox(points, params, addresses)


def check_jordan(arc: ArcApprox, tol: Optional[float] = None) -> bool:
    """No two non-adjacent segments meet and no adjacent pair folds back.

    Only a necessary condition for the limit curve to be a Jordan arc.
    """
    pts = arc.points
    if len(pts) < 3:
        return True
    tol = 1e-12 * max(arc.diameter, 1e-300) if tol is None else tol
    ii, _ = self_close_pairs(pts, tol)
    if len(ii):
        return False
    d1 = pts[1:-1] - pts[:-2]
    d2 = pts[2:] - pts[1:-1]
    cross = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    dot = np.sum(d1 * d2, axis=1)
    scale = np.hypot(*d1.T) * np.hypot(*d2.T)
    fold = (dot < 0) & (np.abs(cross) <= 1e-12 * scale)
    return not bool(np.any(fold))


def attractor_points(maps: Sequence[AffineMap], depth: int) -> np.ndarray:
    """Images of the fixed points of the maps under all words of the given length."""
    seeds = []
    for f in maps:
        kind, p, _ = fixed_set(f)
        seeds.append(p)
    pts = np.array(seeds, dtype=float)
    A = np.stack([f.linear for f in maps])
    b = np.stack([f.translation for f in maps])
    for _ in range(depth):
        pts = (np.einsum("kij,nj->kni", A, pts) + b[:, None, :]).reshape(-1, 2)
        if len(pts) > 200_000:
            pts = np.unique(np.round(pts, 12), axis=0)
    return pts


def unit_disc_normalization(points) -> AffineMap:
    """Similarity mapping the point set into the closed unit disc."""
    pts = np.asarray(points, dtype=float)
    c = 0.5 * (pts.min(axis=0) + pts.max(axis=0))
    r = float(np.max(np.hypot(*(pts - c).T)))
    r = r * (1 + 1e-9) if r > 0 else 1.0
    return AffineMap(np.eye(2) / r, -c / r)


# ---------------------------------------------------------------------------
# arcs for systems given without nodes


def _endpoint_candidates(system: IfsSystem, first: int, last: int):
    f, l = system.maps[first], system.maps[last]
    out = []
    for sf, sl in itertools.product((0, 1), repeat=2):
        if sf == 0:
            kind, a0, _ = fixed_set(f)
            if kind != "point":
                continue
            if sl == 0:
                kind, a1, _ = fixed_set(l)
                if kind != "point":
                    continue
            else:
                a1 = l(a0)
        elif sl == 0:
            kind, a1, _ = fixed_set(l)
            if kind != "point":
                continue
            a0 = f(a1)
        else:
            kind, a0, _ = fixed_set(f @ l)
            if kind != "point":
                continue
            a1 = l(a0)
        out.append((sf, sl, np.asarray(a0), np.asarray(a1)))
    return out


def zipper_readings(system: IfsSystem):
    """All (order, signature, nodes) under which the maps form a zipper."""
    m = system.m
    readings = []
    for first, last in itertools.permutations(range(m), 2):
        for sf, sl, a0, a1 in _endpoint_candidates(system, first, last):
            tol = _node_tol(np.stack([a0, a1]))
            if np.hypot(*(a1 - a0)) <= 1e3 * tol:
                continue
            imgs = [(f(a0), f(a1)) for f in system.maps]

            def walk(cur, used, order, sig, nodes):
                if len(order) == m:
                    if np.hypot(*(cur - a1)) <= tol:
                        readings.append((tuple(order), tuple(sig), np.array(nodes)))
                    return
                step = len(order)
                for k in range(m):
                    if k in used or (k == first) != (step == 0) or (k == last) != (step == m - 1):
                        continue
                    for o in (0, 1):
                        if step == 0 and o != sf or step == m - 1 and o != sl:
                            continue
                        if np.hypot(*(imgs[k][o] - cur)) <= tol:
                            walk(imgs[k][1 - o], used | {k}, order + [k], sig + [o], nodes + [imgs[k][1 - o]])

            walk(a0, frozenset(), [], [], [a0])
    return readings


def infer_zipper(system: IfsSystem) -> Optional[Zipper]:
    """Canonical zipper reading: a0 lexicographically before a1, then smallest order."""
    readings = zipper_readings(system)
    if not readings:
        return None

    def key(r):
        order, sig, nodes = r
        return (tuple(np.round(nodes[0], 9)), order)

    order, sig, nodes = min(readings, key=key)
    return Zipper(system.permuted(order), nodes, sig)


def _chain_level(system, orient, poly, words, tol):
    pieces = []
    for k, f in enumerate(system.maps):
        q = f(poly)
        w = np.hstack([np.full((len(words), 1), k + 1, dtype=np.int16), words])
        if orient[k]:
            q, w = q[::-1], w[::-1]
        pieces.append((q, w))
    pts, wds = pieces[0]
    for q, w in pieces[1:]:
        start = q[0]
        if np.hypot(*(pts[-1] - start)) <= tol:
            pts = np.vstack([pts, q[1:]])
            wds = np.vstack([wds, w[1:]])
            continue
        seg, t, d = locate_on_polyline(start, pts)
        # coarse chords miss the true start point by up to their own length
        if d > tol + np.hypot(*(pts[seg + 1] - pts[seg])):
            return None
        cut = seg + 1 if t > 1e-12 else seg
        pts = np.vstack([pts[:cut], q])
        wds = np.vstack([wds[:cut], w])
    return pts, wds


def chain_arc(system: IfsSystem, depth: int) -> ArcApprox:
    """Arc for a chain of maps whose consecutive pieces may overlap.

    Consecutive pieces are glued by cutting the earlier one where the later
    one starts. The map order is taken as given.
    """
    m = system.m
    best = None
    for sf, sl, a0, a1 in _endpoint_candidates(system, 0, m - 1):
        tol = _node_tol(np.stack([a0, a1]))
        if np.hypot(*(a1 - a0)) <= 1e3 * tol:
            continue
        orient = [sf] + [0] * (m - 2) + [sl]
        prev_end = system.maps[0](a1 if sf == 0 else a0)
        for k in range(1, m - 1):
            f = system.maps[k]
            orient[k] = 0 if np.hypot(*(f(a0) - prev_end)) <= np.hypot(*(f(a1) - prev_end)) else 1
            prev_end = f(a1 if orient[k] == 0 else a0)
        poly = np.stack([a0, a1])
        words = np.zeros((2, 0), dtype=np.int16)
        ok = True
        for _ in range(depth):
            res = _chain_level(system, orient, poly, words, tol)
            if res is None:
                ok = False
                break
            poly, words = res
        if not ok or np.hypot(*(poly[-1] - a1)) > tol * 10:
            continue
        arc = ArcApprox(poly, np.linspace(0.0, 1.0, len(poly)), words)
        if not check_jordan(arc):
            continue
        images = np.vstack([f(poly) for f in system.maps])
        err = hausdorff_distance(images, poly) / max(arc.diameter, 1e-300)
        if best is None or err < best[0]:
            best = (err, arc)
    if best is None:
        raise NotAZipper("maps do not chain into an arc")
    return best[1]


def build_arc(system: IfsSystem, depth: int) -> tuple:
    """Arc approximation for a system: explicit nodes, inferred zipper, or chain.

    Returns ``(arc, zipper_or_None)``; an inferred zipper may list the maps in
    a different order than the system.
    """
    if system.nodes is not None:
        z = Zipper(system, system.nodes, system.signature)
        return arc_approx(z, depth), z
    z = infer_zipper(system)
    if z is not None:
        return arc_approx(z, depth), z
    return chain_arc(system, depth), None


def depth_for_points(m: int, points: int) -> int:
    return max(1, int(math.ceil(math.log(points) / math.log(m))))
