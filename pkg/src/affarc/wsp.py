"""Associated family search, weak separation witnesses and epsilon-nets.

The associated family of S_1..S_m consists of the maps S_j^-1 S_i over word
pairs whose first symbols differ. Word pairs are visited as a tree: the
parent of (i, j) drops the last symbol of i when |i| > |j| and of j
otherwise, so a node extends i when |i| >= |j| and j when |i| <= |j| + 1.
Each node carries two certified lower bounds on the distance to the identity
of everything below it:

* positional: h(x) - x = A_j'^-1 (S_i' x - S_j' x) for x in K, so
  ||h(x) - x|| >= dist(S_i K, S_j K) / sigma_max(A_j), and
  dist(h, Id) >= ||h(x) - x|| / (1 + |x|);
* scale: some eigenvalue of the linear part has modulus on the far side of
  sqrt|det|, so ||A - E|| >= |sqrt|det A| - 1|, and the determinant of any
  descendant lies in a range fixed by the remaining depth.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .affine import E2, AffineMap, conjugate, dist_to_identity, fixed_set, inverse, opnorm
from .attractor import (ArcApprox, IfsSystem, attractor_points, build_arc, check_jordan,
                        hausdorff_distance, locate, point_set_diameter, subarc,
                        unit_disc_normalization)
from .errors import BudgetExceeded, FixedPointOnArc, NoSuitableWord, NotAdvancing, NotJordan
from .geometry import (SegmentIndex, line_polyline_distance, point_polyline_distance,
                       points_polyline_distance)

MAX_FAMILY_DEPTH = 14


@dataclass(frozen=True, eq=False)
class FamilyElement:
    map: AffineMap
    i_word: tuple
    j_word: tuple
    dist: float

    def to_dict(self) -> dict:
        return {"i_word": list(self.i_word), "j_word": list(self.j_word),
                "linear": self.map.linear.tolist(), "translation": self.map.translation.tolist(),
                "dist": self.dist}


def family_element(system: IfsSystem, i_word, j_word) -> FamilyElement:
    h = inverse(system.word_map(j_word)) @ system.word_map(i_word)
    return FamilyElement(h, tuple(i_word), tuple(j_word), dist_to_identity(h))


def enclosing_ball(maps: Sequence[AffineMap], refine_points: int = 4096):
    """Center c and radius r with K inside the closed ball B(c, r).

    Any ball with ||S_k c - c|| + sigma_k r <= r is mapped into itself; its
    images under all words of a fixed length then still cover K.
    """
    c = attractor_points(maps, 4).mean(axis=0)
    r0 = max(float(np.hypot(*(f(c) - c))) / (1.0 - f.lipschitz) for f in maps)
    m = len(maps)
    length = max(1, int(math.log(refine_points) / math.log(m)))
    A = np.stack([f.linear for f in maps])
    b = np.stack([f.translation for f in maps])
    # K lies in the union of the balls S_w B(c, r0) over words of this length
    lin = np.eye(2)[None]
    tr = np.zeros((1, 2))
    for _ in range(length):
        new_lin = np.einsum("nij,kjl->nkil", lin, A).reshape(-1, 2, 2)
        new_tr = (np.einsum("nij,kj->nki", lin, b) + tr[:, None, :]).reshape(-1, 2)
        lin, tr = new_lin, new_tr
    centers = np.einsum("nij,j->ni", lin, c) + tr
    r = float(np.max(np.hypot(*(centers - c).T) + opnorm(lin) * r0))
    return c, min(r, r0) * (1 + 1e-12) + 1e-15


def _inv2(a):
    det = a[:, 0, 0] * a[:, 1, 1] - a[:, 0, 1] * a[:, 1, 0]
    out = np.empty_like(a)
    out[:, 0, 0] = a[:, 1, 1]
    out[:, 1, 1] = a[:, 0, 0]
    out[:, 0, 1] = -a[:, 0, 1]
    out[:, 1, 0] = -a[:, 1, 0]
    return out / det[:, None, None]


def _decode(code: int, length: int, m: int) -> tuple:
    out = []
    for _ in range(length):
        code, r = divmod(code, m)
        out.append(r + 1)
    return tuple(reversed(out))


def enumerate_family(system: IfsSystem, max_depth: int, prune_radius: float = math.inf,
                     cap: int = 500_000, node_cap: int = 4_000_000) -> list:
    """All S_j^-1 S_i with |i|, |j| <= max_depth, i_1 != j_1 and distance <= prune_radius.

    Output is sorted by (i_word, j_word).
    """
    if not 1 <= max_depth <= MAX_FAMILY_DEPTH:
        raise ValueError(f"max_depth must lie in [1, {MAX_FAMILY_DEPTH}]")
    maps = system.maps
    m = system.m
    A = np.stack([f.linear for f in maps])
    b = np.stack([f.translation for f in maps])
    dets = np.abs(np.linalg.det(A))
    dmin = float(dets.min())
    prune = math.isfinite(prune_radius)
    if prune:
        c, r = enclosing_ball(maps)
        R = float(np.hypot(*c)) + r
    D = max_depth

    pairs = [(i, j) for i in range(m) for j in range(m) if i != j]
    wi = np.array([p[0] for p in pairs], dtype=np.int64)
    wj = np.array([p[1] for p in pairs], dtype=np.int64)
    li = np.ones(len(pairs), dtype=np.int64)
    lj = np.ones(len(pairs), dtype=np.int64)
    Ai, bi = A[wi].copy(), b[wi].copy()
    Aj, bj = A[wj].copy(), b[wj].copy()

    found = []
    while len(wi):
        if len(wi) > node_cap:
            raise BudgetExceeded(f"{len(wi)} open word pairs exceed the node cap {node_cap}")
        Aj_inv = _inv2(Aj)
        Ah = np.einsum("nij,njk->nik", Aj_inv, Ai)
        bh = np.einsum("nij,nj->ni", Aj_inv, bi - bj)
        dist = np.maximum(opnorm(Ah - E2), np.hypot(*bh.T))
        hit = np.flatnonzero(dist <= prune_radius)
        for k in hit:
            found.append((wi[k], li[k], wj[k], lj[k], Ah[k], bh[k], float(dist[k])))
        if len(found) > cap:
            raise BudgetExceeded(f"more than {cap} family elements within {prune_radius}")

        grow_i = (li >= lj) & (li < D)
        grow_j = (li <= lj + 1) & (lj < D)
        alive = grow_i | grow_j
        if prune:
            sig_i, sig_j = opnorm(Ai), opnorm(Aj)
            gap = np.hypot(*((np.einsum("nij,j->ni", Ai, c) + bi) - (np.einsum("nij,j->ni", Aj, c) + bj)).T)
            lb_pos = (gap - (sig_i + sig_j) * r) / (sig_j * (1.0 + R))
            rho = np.abs(np.linalg.det(Ai)) / np.abs(np.linalg.det(Aj))
            both = (li >= lj) & (li <= lj + 1)
            only_i = li >= lj + 2
            lo = np.where(only_i | both, rho * dmin ** (D - li), rho)
            hi = np.where(only_i, rho, rho / dmin ** (D - lj))
            lb_det = np.where(hi < 1.0, 1.0 - np.sqrt(hi), np.where(lo > 1.0, np.sqrt(lo) - 1.0, 0.0))
            alive &= np.maximum(lb_pos, lb_det) <= prune_radius * (1 + 1e-12) + 1e-15

        gi = np.flatnonzero(alive & grow_i)
        gj = np.flatnonzero(alive & grow_j)
        ks = np.arange(m)
        new = {
            "wi": np.concatenate([(wi[gi, None] * m + ks).ravel(), np.repeat(wi[gj], m)]),
            "li": np.concatenate([np.repeat(li[gi] + 1, m), np.repeat(li[gj], m)]),
            "wj": np.concatenate([np.repeat(wj[gi], m), (wj[gj, None] * m + ks).ravel()]),
            "lj": np.concatenate([np.repeat(lj[gi], m), np.repeat(lj[gj] + 1, m)]),
            "Ai": np.concatenate([np.einsum("nij,kjl->nkil", Ai[gi], A).reshape(-1, 2, 2), np.repeat(Ai[gj], m, axis=0)]),
            "bi": np.concatenate([(np.einsum("nij,kj->nki", Ai[gi], b) + bi[gi, None]).reshape(-1, 2), np.repeat(bi[gj], m, axis=0)]),
            "Aj": np.concatenate([np.repeat(Aj[gi], m, axis=0), np.einsum("nij,kjl->nkil", Aj[gj], A).reshape(-1, 2, 2)]),
            "bj": np.concatenate([np.repeat(bj[gi], m, axis=0), (np.einsum("nij,kj->nki", Aj[gj], b) + bj[gj, None]).reshape(-1, 2)]),
        }
        wi, li, wj, lj = new["wi"], new["li"], new["wj"], new["lj"]
        Ai, bi, Aj, bj = new["Ai"], new["bi"], new["Aj"], new["bj"]

    out = [FamilyElement(AffineMap(a, t), _decode(int(ci), int(ni), m), _decode(int(cj), int(nj), m), d)
           for ci, ni, cj, nj, a, t, d in found]
    out.sort(key=lambda e: (e.i_word, e.j_word))
    return out


def brute_force_family(system: IfsSystem, max_depth: int, radius: float = math.inf) -> list:
    """Unpruned enumeration of every word pair; reference for small depths."""
    words = [w for n in range(1, max_depth + 1) for w in itertools.product(range(1, system.m + 1), repeat=n)]
    cache = {w: system.word_map(w) for w in words}
    inv = {w: inverse(f) for w, f in cache.items()}
    out = []
    for i in words:
        for j in words:
            if i[0] == j[0]:
                continue
            h = inv[j] @ cache[i]
            d = dist_to_identity(h)
            if d <= radius:
                out.append(FamilyElement(h, i, j, d))
    return out


def default_tol(arc: ArcApprox) -> float:
    return 1e-3 * arc.diameter


def intersects_arc(h: AffineMap, arc: ArcApprox, tol: Optional[float] = None,
                   index: Optional[SegmentIndex] = None) -> bool:
    """Does h(arc) come within tol of the arc?"""
    tol = default_tol(arc) if tol is None else tol
    index = SegmentIndex(arc.points) if index is None else index
    return index.within(h(arc.points), tol)


@dataclass(frozen=True)
class ProperIntersection:
    proper: bool
    component: Optional[tuple] = None  # (start, end) along the first arc


def _runs(mask: np.ndarray):
    """Maximal runs of True as (first, last) index pairs."""
    if not mask.any():
        return []
    idx = np.flatnonzero(mask)
    breaks = np.flatnonzero(np.diff(idx) > 1)
    starts = np.concatenate([[idx[0]], idx[breaks + 1]])
    ends = np.concatenate([idx[breaks], [idx[-1]]])
    return list(zip(starts.tolist(), ends.tolist()))


def proper_intersection(arc1: ArcApprox, arc2: ArcApprox, tol: Optional[float] = None) -> ProperIntersection:
    """Is some component of arc1 & arc2 a subarc running from an end of one arc to an end of the other?"""
    p, q = arc1.points, arc2.points
    tol = 1e-3 * max(arc1.diameter, arc2.diameter) if tol is None else tol
    seg = np.hypot(*np.diff(p, axis=0).T)
    q_ends = (q[0], q[-1])

    def end_of_q(k):
        # the true end of arc2 can sit anywhere on the adjacent segments of arc1
        slack = tol + max(seg[max(k - 1, 0)], seg[min(k, len(seg) - 1)])
        d = [float(np.hypot(*(p[k] - e))) for e in q_ends]
        j = int(np.argmin(d))
        return q_ends[j] if d[j] <= slack else None

    near = points_polyline_distance(p, q) <= tol
    first = None
    for f, l in _runs(near):
        if np.hypot(*(p[l] - p[f])) <= 10 * tol:
            continue
        ends = []
        for k, is_end1 in ((f, f == 0), (l, l == len(p) - 1)):
            ends.append((is_end1, end_of_q(k)))
        (a1, a2), (b1, b2) = ends
        start = a2 if a2 is not None and not a1 else p[f]
        stop = b2 if b2 is not None and not b1 else p[l]
        comp = (np.array(start, dtype=float), np.array(stop, dtype=float))
        if (a1 and b2 is not None) or (a2 is not None and b1):
            return ProperIntersection(True, comp)
        if first is None:
            first = comp
    return ProperIntersection(False, first)


def fixed_points_on_arc(f: AffineMap, arc: ArcApprox, tol: Optional[float] = None) -> bool:
    tol = default_tol(arc) if tol is None else tol
    kind, p, direction = fixed_set(f)
    if kind == "point":
        return point_polyline_distance(p, arc.points) <= tol
    if kind == "line":
        return line_polyline_distance(p, direction, arc.points) <= tol
    return kind == "plane"


@dataclass(frozen=True, eq=False)
class WspReport:
    verdict: str  # "satisfied-to-depth" or "violated"
    witnesses: list
    depth_searched: int
    epsilon: float
    candidates: int = 0
    min_dist: Optional[float] = None

    @property
    def violated(self) -> bool:
        return self.verdict == "violated"

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "epsilon": self.epsilon, "depth": self.depth_searched,
                "candidates": self.candidates, "min_dist": self.min_dist,
                "witnesses": [w.to_dict() for w in self.witnesses]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def reference_arc(system: IfsSystem, points: int = 2000, max_depth: int = 16) -> ArcApprox:
    """Arc approximation with at least ``points`` vertices (or the depth cap)."""
    depth = 1
    while True:
        arc, _ = build_arc(system, depth)
        if len(arc) >= points or depth >= max_depth:
            return arc
        depth += 1


def wsp_check(system: IfsSystem, epsilon: float, max_depth: int,
              arc: Optional[ArcApprox] = None, tol: Optional[float] = None) -> WspReport:
    """Search for family elements h != Id with dist(h, Id) < epsilon and h(arc) meeting the arc."""
    arc = reference_arc(system) if arc is None else arc
    if not check_jordan(arc):
        raise NotJordan("the attractor polyline intersects itself")
    if epsilon <= 0:
        return WspReport("satisfied-to-depth", [], max_depth, epsilon)
    elements = enumerate_family(system, max_depth, prune_radius=epsilon)
    cands = [e for e in elements if 1e-12 < e.dist < epsilon]
    index = SegmentIndex(arc.points)
    witnesses = [e for e in cands if intersects_arc(e.map, arc, tol, index)]
    witnesses.sort(key=lambda e: (e.dist, e.i_word, e.j_word))
    min_dist = min((e.dist for e in cands), default=None)
    verdict = "violated" if witnesses else "satisfied-to-depth"
    return WspReport(verdict, witnesses, max_depth, epsilon, len(cands), min_dist)


def min_family_distance(system: IfsSystem, max_depth: int, start_radius: float = 0.25) -> float:
    """Smallest distance to the identity over non-identity family elements up to max_depth."""
    radius = start_radius
    while True:
        found = [e.dist for e in enumerate_family(system, max_depth, radius) if e.dist > 1e-12]
        if found:
            return min(found)
        radius *= 2


@dataclass(frozen=True, eq=False)
class EpsilonNet:
    f: AffineMap
    base: np.ndarray
    N: int
    points: np.ndarray
    orbit: np.ndarray  # f^n(a0), n = 0..N
    sigma_arcs: list  # (start, end) point pairs along the arc

    def sigma_diameters(self, arc: ArcApprox, tol: Optional[float] = None) -> np.ndarray:
        tol = default_tol(arc) if tol is None else tol
        return np.array([point_set_diameter(subarc(arc, p, q, tol).points) for p, q in self.sigma_arcs])

    def hausdorff_to(self, arc: ArcApprox) -> float:
        return hausdorff_distance(self.points, arc.points)


def _walk(g: AffineMap, x, arc, tol, sign, limit):
    out = []
    _, prev, _ = locate(arc, x)
    cur = np.asarray(x, dtype=float)
    for _ in range(limit):
        nxt = g(cur)
        if np.hypot(*(nxt - cur)) < 1e-12:
            raise NotAdvancing("iterates stall")
        _, par, d = locate(arc, nxt)
        if d > tol or sign * (par - prev) <= 0:
            break
        out.append(nxt)
        cur, prev = nxt, par
    return out


def epsilon_net(f: AffineMap, arc: ArcApprox, x=None, tol: Optional[float] = None,
                limit: int = 100_000) -> EpsilonNet:
    """Orbit of x under f clipped to the arc, plus the fundamental pieces f^n(gamma) minus f^(n+1)(gamma)."""
    tol = default_tol(arc) if tol is None else tol
    if fixed_points_on_arc(f, arc, tol):
        raise FixedPointOnArc("f has a fixed point on the arc")
    a0 = arc.a0
    orbit = [a0.copy()] + _walk(f, a0, arc, tol, +1, limit)
    N = len(orbit) - 1
    x = a0 if x is None else np.asarray(x, dtype=float)
    back = _walk(inverse(f), x, arc, tol, -1, limit)
    fwd = _walk(f, x, arc, tol, +1, limit)
    points = np.array(back[::-1] + [x] + fwd)
    sigma = [(orbit[n], orbit[n + 1]) for n in range(N)]
    if np.hypot(*(orbit[-1] - arc.a1)) > 0:
        sigma.append((orbit[-1], arc.a1.copy()))
    return EpsilonNet(f, x, N, points, np.array(orbit), sigma)


def relocating_word(fs: Sequence[AffineMap], system: IfsSystem, arc: ArcApprox, max_depth: int = 10):
    """First word w (by length, then lexicographic) with S_w^-1(fix f) outside the disc around the arc."""
    fixed = []
    for f in fs:
        kind, p, _ = fixed_set(f)
        if kind != "point":
            raise ValueError("relocation needs maps with a unique fixed point (Type 1)")
        fixed.append(p)
    fixed = np.array(fixed)
    T = unit_disc_normalization(arc.points)
    for n in range(1, max_depth + 1):
        for w in itertools.product(range(1, system.m + 1), repeat=n):
            gi = inverse(system.word_map(w))
            if np.all(np.hypot(*T(gi(fixed)).T) > 1.0):
                return w
    raise NoSuitableWord(f"no word up to length {max_depth} moves every fixed point off the disc")


def relocate_fixed_points(fs: Sequence[AffineMap], system: IfsSystem, arc: ArcApprox,
                          max_depth: int = 10) -> list:
    """Conjugate each f by g = S_w so that fix(g^-1 f g) = g^-1(fix f) leaves the disc."""
    g = system.word_map(relocating_word(fs, system, arc, max_depth))
    return [conjugate(f, g) for f in fs]
