"""Recover a graph-directed (multizipper) structure from a self-affine arc.

Pipeline: put the maps in chain order and check irreducibility, collect the
marked points g(a_i) of words g whose image shares an end point with the
arc, cut that set down to a finite partition, and read off which map sends
which partition piece into which.

Positions along the working polyline are measured by the continuous vertex
index returned by :func:`affarc.attractor.locate`; point identity is
decided in the plane with the merge tolerance.
"""
from __future__ import annotations

import itertools
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .affine import AffineMap, inverse
from .attractor import ArcApprox, IfsSystem, build_arc, locate, polyline_hausdorff
from .conic import classify_arc
from .errors import (AmbiguousPlacement, CannotSeparate, IsParabolic, NoCover, NotAChain,
                     Reducible)
from .geometry import point_polyline_distance, points_polyline_distance, polylines_within

MERGE_TOL = 1e-7
CATALOG_DEPTH = 6
SHRINK_STEPS = 6
S_TOL = 1e-6


def worker_count() -> int:
    """Thread cap from AFFARC_THREADS (default 1)."""
    try:
        return max(1, int(os.environ.get("AFFARC_THREADS", "1")))
    except ValueError:
        return 1


def _merge_tol(arc: ArcApprox) -> float:
    return MERGE_TOL * arc.diameter


def _pos(arc: ArcApprox, x) -> float:
    return locate(arc, x)[0]


def _same(p, q, tol) -> bool:
    return float(np.hypot(*(np.asarray(p) - np.asarray(q)))) <= tol


# ---------------------------------------------------------------------------
# chain order and irreducibility


def covers_without(system: IfsSystem, arc: ArcApprox, drop: int, tol: float) -> bool:
    """Do the pieces S_k(arc), k != drop, already cover the arc?

    If so the arc is invariant under the smaller system, hence its attractor.
    """
    pts = arc.points
    best = np.full(len(pts), np.inf)
    for k, f in enumerate(system.maps):
        if k != drop:
            best = np.minimum(best, points_polyline_distance(pts, f(pts)))
    return float(best.max()) <= tol


def order_and_check(system: IfsSystem, arc: ArcApprox, tol: Optional[float] = None) -> IfsSystem:
    """Return the system with maps in chain order along the arc.

    Raises Reducible when some proper subsystem has the same attractor and
    NotAChain when the pieces do not meet like consecutive links.
    """
    diam = arc.diameter
    tol = 1e-3 * diam if tol is None else tol
    for k in range(system.m):
        if covers_without(system, arc, k, tol):
            raise Reducible(f"dropping map {k + 1} leaves the attractor unchanged")
    touch = 1e-6 * diam
    pieces = [f(arc.points) for f in system.maps]
    m = system.m
    adj = {k: set() for k in range(m)}
    for i, j in itertools.combinations(range(m), 2):
        if polylines_within(pieces[i], pieces[j], touch):
            adj[i].add(j)
            adj[j].add(i)
    starts = [k for k in range(m) if point_polyline_distance(arc.a0, pieces[k]) <= touch]
    if len(starts) != 1 or any(len(v) > 2 for v in adj.values()):
        raise NotAChain("pieces do not form a chain from a0 to a1")
    order = [starts[0]]
    while len(order) < m:
        nxt = [j for j in adj[order[-1]] if j not in order]
        if len(nxt) != 1:
            raise NotAChain("pieces do not form a chain from a0 to a1")
        order.append(nxt[0])
    if point_polyline_distance(arc.a1, pieces[order[-1]]) > touch:
        raise NotAChain("the last piece does not contain a1")
    if any(j in adj[i] for i, j in itertools.combinations(order, 2) if abs(order.index(i) - order.index(j)) > 1):
        raise NotAChain("non-consecutive pieces meet")
    return system.permuted(order)


def check_hypothesis(arc: ArcApprox) -> str:
    verdict = classify_arc(arc)
    if verdict != "neither":
        raise IsParabolic(f"the arc is a {verdict}")
    return verdict


# ---------------------------------------------------------------------------
# marked points


@dataclass(frozen=True, eq=False)
class CatalogElement:
    word: tuple
    map: AffineMap
    component: tuple  # (end point of the arc, marked point)
    marked: np.ndarray
    side: int  # 0 for P0, 1 for P1


@dataclass(frozen=True, eq=False)
class IntersectionCatalog:
    elements: list
    points: np.ndarray  # marked points ordered along the arc
    positions: np.ndarray
    in_p0: np.ndarray
    in_p1: np.ndarray
    levels: np.ndarray  # shortest word length producing each point
    merge_tol: float

    def __len__(self):
        return len(self.points)

    def without(self, index: int) -> "IntersectionCatalog":
        keep = np.arange(len(self.points)) != index
        return replace(self, points=self.points[keep], positions=self.positions[keep],
                       in_p0=self.in_p0[keep], in_p1=self.in_p1[keep], levels=self.levels[keep])


def _words(m: int, depth: int):
    for n in range(1, depth + 1):
        yield from itertools.product(range(1, m + 1), repeat=n)


def build_catalog(system: IfsSystem, arc: ArcApprox, depth: int = CATALOG_DEPTH,
                  tol: Optional[float] = None, check: bool = True) -> IntersectionCatalog:
    """Marked points g(a_i) for words g = S_w whose image g(arc) ends at a0 or a1.

    For such g the arc and its image meet in g(arc) itself, a subarc from an
    end point a_j of the arc to g(a_i). The side tag is j: the subarc avoids
    a_(1-j).
    """
    if check:
        check_hypothesis(arc)
    tol = _merge_tol(arc) if tol is None else tol
    ends = (arc.a0, arc.a1)

    def probe(w):
        g = system.word_map(w)
        imgs = (g(ends[0]), g(ends[1]))
        out = []
        for e in (0, 1):
            for j in (0, 1):
                if _same(imgs[e], ends[j], tol):
                    p = imgs[1 - e]
                    if not (_same(p, ends[0], tol) or _same(p, ends[1], tol)):
                        out.append(CatalogElement(tuple(w), g, (ends[j].copy(), p), p, j))
        return out

    words = list(_words(system.m, depth))
    with ThreadPoolExecutor(max_workers=worker_count()) as ex:
        found = [el for batch in ex.map(probe, words) for el in batch]

    pts, p0, p1, lv = [], [], [], []
    for el in found:
        for k, q in enumerate(pts):
            if _same(q, el.marked, tol):
                break
        else:
            k = len(pts)
            pts.append(el.marked)
            p0.append(False)
            p1.append(False)
            lv.append(len(el.word))
        (p0 if el.side == 0 else p1)[k] = True
        lv[k] = min(lv[k], len(el.word))
    pts = np.array(pts, dtype=float).reshape(-1, 2)
    pos = np.array([_pos(arc, p) for p in pts])
    order = np.argsort(pos, kind="stable")
    return IntersectionCatalog(found, pts[order], pos[order], np.array(p0, bool)[order],
                               np.array(p1, bool)[order], np.array(lv, int)[order], tol)


def _full_set(catalog: IntersectionCatalog, arc: ArcApprox):
    pts = np.vstack([arc.a0[None], catalog.points, arc.a1[None]])
    pos = np.concatenate([[0.0], catalog.positions, [len(arc.points) - 1.0]])
    return pts, pos


def _has_image(g: AffineMap, pts: np.ndarray, p, tol) -> bool:
    return len(pts) > 0 and float(np.min(np.hypot(*(g(pts) - p).T))) <= tol


def _piece_interval(arc: ArcApprox, g: AffineMap):
    a, b = _pos(arc, g(arc.a0)), _pos(arc, g(arc.a1))
    return min(a, b), max(a, b)


def _interior(arc, g, p, s, tol) -> bool:
    lo, hi = _piece_interval(arc, g)
    return lo < s < hi and not _same(p, g(arc.a0), tol) and not _same(p, g(arc.a1), tol)


@dataclass(frozen=True)
class BReport:
    b1_violations: list = field(default_factory=list)  # (word, point)
    b2_violations: list = field(default_factory=list)  # (word, word, point)

    @property
    def ok(self) -> bool:
        return not self.b1_violations and not self.b2_violations


def verify_b_properties(catalog: IntersectionCatalog, system: IfsSystem, arc: ArcApprox,
                        word_depth: int = 2) -> BReport:
    """Check that marked points inside a copy g(arc) come from marked points, for short words g."""
    tol = catalog.merge_tol
    pts, pos = _full_set(catalog, arc)
    words = list(_words(system.m, word_depth))
    maps = {w: system.word_map(w) for w in words}
    b1 = []
    for w, g in maps.items():
        for p, s in zip(pts, pos):
            if _interior(arc, g, p, s, tol) and not _has_image(g, pts, p, tol):
                b1.append((w, p.copy()))
    b2 = []
    for u, v in itertools.combinations(words, 2):
        if u[0] == v[0]:
            continue
        g1, g2 = maps[u], maps[v]
        lo1, hi1 = _piece_interval(arc, g1)
        lo2, hi2 = _piece_interval(arc, g2)
        overlap = min(hi1, hi2) - max(lo1, lo2)
        nested = (lo1 <= lo2 and hi2 <= hi1) or (lo2 <= lo1 and hi1 <= hi2)
        if overlap <= S_TOL or nested:
            continue
        for ga, gb, wa, wb in ((g1, g2, u, v), (g2, g1, v, u)):
            for e in (arc.a0, arc.a1):
                q = ga(e)
                if _interior(arc, gb, q, _pos(arc, q), tol) and not _has_image(gb, pts, q, tol):
                    b2.append((wa, wb, q))
    return BReport(b1, b2)


# ---------------------------------------------------------------------------
# finite partition


@dataclass(frozen=True, eq=False)
class PartitionP:
    points: np.ndarray  # a0 = p_0, ..., p_N = a1 along the arc
    positions: np.ndarray

    @property
    def subarcs(self) -> list:
        return [(self.points[k], self.points[k + 1]) for k in range(len(self.points) - 1)]

    def __len__(self):
        return len(self.points)


def check_c1(points: np.ndarray, system: IfsSystem, arc: ArcApprox, tol: float) -> list:
    """Points interior to a piece S_j(arc) without an S_j-preimage in the set."""
    bad = []
    for j, f in enumerate(system.maps):
        for p in points:
            if _interior(arc, f, p, _pos(arc, p), tol) and not _has_image(f, points, p, tol):
                bad.append((j + 1, p.copy()))
    return bad


def check_c2(points: np.ndarray, system: IfsSystem, arc: ArcApprox, tol: float) -> list:
    """End images of one piece that fall inside the next piece but miss its image of the set."""
    bad = []
    maps = system.maps
    for j in range(system.m - 1):
        for f, g, k in ((maps[j], maps[j + 1], j + 2), (maps[j + 1], maps[j], j + 1)):
            for e in (arc.a0, arc.a1):
                q = f(e)
                if _interior(arc, g, q, _pos(arc, q), tol) and not _has_image(g, points, q, tol):
                    bad.append((k, q))
    return bad


def _neighbourhoods(catalog: IntersectionCatalog, system: IfsSystem, arc: ArcApprox, shrink: int):
    """Positions bounding U_0 = [a0, u0) and U_1 = (u1, a1]."""
    last = len(arc.points) - 1.0
    first_piece = _piece_interval(arc, system.maps[0])
    last_piece = _piece_interval(arc, system.maps[-1])
    p1 = catalog.positions[catalog.in_p1]
    p0 = catalog.positions[catalog.in_p0]
    u0 = min([first_piece[1]] + list(p1))
    u1 = max([last_piece[0]] + list(p0))
    u0 *= 0.5 ** shrink
    u1 = last - (last - u1) * 0.5 ** shrink
    if u0 > u1:
        raise CannotSeparate("end neighbourhoods overlap")
    return u0, u1


def _point_at(arc: ArcApprox, s: float) -> np.ndarray:
    k = min(int(np.floor(s)), len(arc.points) - 2)
    t = s - k
    return (1 - t) * arc.points[k] + t * arc.points[k + 1]


def _removal_bounds(catalog, system, arc, u0, u1):
    """Positions w0, w1 with W_0 = [a0, w0) and W_1 = (w1, a1]."""
    tol = catalog.merge_tol
    pts, pos = _full_set(catalog, arc)
    ends = (arc.a0, arc.a1)
    ubound = (_point_at(arc, u0), _point_at(arc, u1))
    bounds = [u0, u1]
    for k, f in enumerate(system.maps):
        finv = inverse(f)
        lo, hi = _piece_interval(arc, f)
        for i in (0, 1):
            q = f(ends[i])
            hit = [j for j in (0, 1) if _same(q, ends[j], tol)]
            if hit:
                # w(k, i) = U_j; pull its far boundary back through S_k
                far = ubound[hit[0]]
            else:
                sq = _pos(arc, q)
                other = f(ends[1 - i])
                toward_hi = _pos(arc, other) > sq
                if toward_hi:
                    cand = [(s, p) for p, s in zip(pts, pos) if s > sq and not _same(p, q, tol) and s <= hi]
                    far = min(cand, key=lambda c: c[0])[1] if cand else other
                else:
                    cand = [(s, p) for p, s in zip(pts, pos) if s < sq and not _same(p, q, tol) and s >= lo]
                    far = max(cand, key=lambda c: c[0])[1] if cand else other
            r = _pos(arc, finv(far))
            bounds[i] = min(bounds[i], r) if i == 0 else max(bounds[i], r)
    return bounds[0], bounds[1]


def prune_to_finite(catalog: IntersectionCatalog, system: IfsSystem, arc: ArcApprox,
                    shrink_steps: int = SHRINK_STEPS) -> PartitionP:
    """Drop the marked points that only accumulate at the ends.

    U_i starts as the largest neighbourhood of a_i inside the end piece that
    holds no point of the opposite side; it is halved while the resulting
    set fails c1 or c2.
    """
    tol = catalog.merge_tol
    pts, pos = _full_set(catalog, arc)
    last_error = "no admissible neighbourhoods"
    for shrink in range(shrink_steps + 1):
        try:
            u0, u1 = _neighbourhoods(catalog, system, arc, shrink)
        except CannotSeparate as exc:
            last_error = str(exc)
            continue
        w0, w1 = _removal_bounds(catalog, system, arc, u0, u1)
        b0, b1 = _point_at(arc, w0), _point_at(arc, w1)
        keep = []
        for k, (p, s) in enumerate(zip(pts, pos)):
            if k == 0 or k == len(pts) - 1:
                keep.append(k)
            elif s < w0 and not _same(p, b0, tol):
                continue
            elif s > w1 and not _same(p, b1, tol):
                continue
            else:
                keep.append(k)
        chosen = pts[keep]
        if not check_c1(chosen, system, arc, tol) and not check_c2(chosen, system, arc, tol):
            return PartitionP(chosen, pos[keep])
        last_error = "c1/c2 fail for the pruned set"
    raise CannotSeparate(last_error)


# ---------------------------------------------------------------------------
# graph


@dataclass(frozen=True)
class Vertex:
    id: int
    start: np.ndarray
    end: np.ndarray


@dataclass(frozen=True, eq=False)
class Edge:
    source: int
    target: int
    map_index: int  # 1-based index of S_k
    map: AffineMap
    order: int  # position of the image inside the source piece
    reversed: bool  # image runs against the arc direction

    def to_dict(self) -> dict:
        c = self.map.coefficients()
        return {"source": self.source, "target": self.target, "map": self.map_index,
                "coefficients": [c[:3], c[3:]], "order": self.order, "reversed": self.reversed}


@dataclass(frozen=True, eq=False)
class MultizipperGraph:
    vertices: list
    edges: list
    extra: dict = field(default_factory=dict)

    def out_edges(self, v: int) -> list:
        return sorted((e for e in self.edges if e.source == v), key=lambda e: e.order)

    def to_dict(self) -> dict:
        out = {"vertices": [{"id": v.id, "start": v.start.tolist(), "end": v.end.tolist()} for v in self.vertices],
               "edges": [e.to_dict() for e in self.edges]}
        out.update(self.extra)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "MultizipperGraph":
        verts = [Vertex(int(v["id"]), np.array(v["start"], float), np.array(v["end"], float))
                 for v in data["vertices"]]
        edges = []
        for e in data["edges"]:
            (a11, a12, b1), (a21, a22, b2) = e["coefficients"]
            edges.append(Edge(int(e["source"]), int(e["target"]), int(e["map"]),
                              AffineMap([[a11, a12], [a21, a22]], [b1, b2]), int(e["order"]), bool(e["reversed"])))
        extra = {k: v for k, v in data.items() if k not in ("vertices", "edges")}
        return cls(verts, edges, extra)


def refine_and_build_graph(partition: PartitionP, system: IfsSystem, arc: ArcApprox,
                           tol: Optional[float] = None) -> MultizipperGraph:
    """Vertices are the partition pieces; S_k(delta_j) inside delta_i gives an edge i -> j."""
    tol = _merge_tol(arc) if tol is None else tol
    pts, pos = partition.points, partition.positions
    n_pieces = len(pts) - 1
    pieces = [_piece_interval(arc, f) for f in system.maps]
    images = []
    for k, f in enumerate(system.maps):
        for j in range(n_pieces):
            a, b = f(pts[j]), f(pts[j + 1])
            sa, sb = _pos(arc, a), _pos(arc, b)
            lo, hi = min(sa, sb), max(sa, sb)
            # overlaps of consecutive pieces are tiled by the smaller map index
            if any(pieces[i][0] - S_TOL <= lo and hi <= pieces[i][1] + S_TOL for i in range(k)):
                continue
            home = [i for i in range(n_pieces) if pos[i] - S_TOL <= lo and hi <= pos[i + 1] + S_TOL]
            if not home:
                raise AmbiguousPlacement(f"S_{k + 1} of piece {j + 1} straddles a partition point")
            rev = sa > sb
            start, end = (b, a) if rev else (a, b)
            images.append((home[0], j, k, lo, hi, start, end, rev))
    vertices = [Vertex(i + 1, pts[i].copy(), pts[i + 1].copy()) for i in range(n_pieces)]
    edges = []
    for i in range(n_pieces):
        inside = sorted((im for im in images if im[0] == i), key=lambda im: (im[3], im[4]))
        cursor = pts[i]
        for order, (_, j, k, lo, hi, start, end, rev) in enumerate(inside):
            if not _same(start, cursor, tol):
                raise NoCover(f"piece {i + 1} is not tiled exactly by its images")
            cursor = end
            edges.append(Edge(i + 1, j + 1, k + 1, system.maps[k], order, bool(rev)))
        if not _same(cursor, pts[i + 1], tol):
            raise NoCover(f"piece {i + 1} is not tiled exactly by its images")
    return MultizipperGraph(vertices, edges)


def images_equal_or_disjoint(graph: MultizipperGraph, arc: ArcApprox) -> bool:
    """Distinct edge images have equal or interior-disjoint position intervals."""
    verts = {v.id: v for v in graph.vertices}
    spans = []
    for e in graph.edges:
        t = verts[e.target]
        a, b = _pos(arc, e.map(t.start)), _pos(arc, e.map(t.end))
        spans.append((min(a, b), max(a, b)))
    for (a, b), (c, d) in itertools.combinations(spans, 2):
        equal = abs(a - c) <= S_TOL and abs(b - d) <= S_TOL
        disjoint = b <= c + S_TOL or d <= a + S_TOL
        if not (equal or disjoint):
            return False
    return True


@dataclass(frozen=True, eq=False)
class Reconstruction:
    vertex_arcs: list
    arc: ArcApprox  # vertex arcs joined in order
    hausdorff: Optional[float] = None


def reconstruct(graph: MultizipperGraph, depth: int, reference: Optional[ArcApprox] = None) -> Reconstruction:
    """Graph-directed iteration started from the vertex chords."""
    if depth < 0:
        raise ValueError("depth must be non-negative")
    polys = {v.id: np.stack([v.start, v.end]) for v in graph.vertices}
    out_edges = {v.id: graph.out_edges(v.id) for v in graph.vertices}
    for _ in range(depth):
        new = {}
        for v in graph.vertices:
            parts = []
            for e in out_edges[v.id]:
                q = e.map(polys[e.target])
                parts.append(q[::-1] if e.reversed else q)
            new[v.id] = np.vstack([parts[0]] + [q[1:] for q in parts[1:]])
        polys = new
    arcs = []
    for v in graph.vertices:
        p = polys[v.id]
        arcs.append(ArcApprox(p, np.linspace(0.0, 1.0, len(p)), np.zeros((len(p), 0), dtype=np.int16)))
    joined = np.vstack([arcs[0].points] + [a.points[1:] for a in arcs[1:]])
    whole = ArcApprox(joined, np.linspace(0.0, 1.0, len(joined)), np.zeros((len(joined), 0), dtype=np.int16))
    h = None if reference is None else polyline_hausdorff(joined, reference.points)
    return Reconstruction(arcs, whole, h)


# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ExtractionResult:
    system: IfsSystem
    arc: ArcApprox
    catalog: IntersectionCatalog
    partition: PartitionP
    graph: MultizipperGraph
    reconstruction: Reconstruction
    relative_hausdorff: float


def extract_multizipper(system: IfsSystem, depth: int = 10, catalog_depth: int = CATALOG_DEPTH,
                        arc_points: int = 2000) -> ExtractionResult:
    """Full pipeline: detector, chain order, catalog, finite partition, graph, reconstruction."""
    d = 1
    while True:
        arc, _ = build_arc(system, d)
        if len(arc) >= arc_points or d >= 16:
            break
        d += 1
    check_hypothesis(arc)
    ordered = order_and_check(system, arc)
    catalog = build_catalog(ordered, arc, catalog_depth, check=False)
    partition = prune_to_finite(catalog, ordered, arc)
    graph = refine_and_build_graph(partition, ordered, arc)
    if not images_equal_or_disjoint(graph, arc):
        raise NoCover("edge images overlap without coinciding")
    rec = reconstruct(graph, depth, reference=arc)
    rel = rec.hausdorff / arc.diameter
    graph = MultizipperGraph(graph.vertices, graph.edges,
                             {"reconstruction_depth": depth, "reconstruction_hausdorff": rec.hausdorff,
                              "relative_hausdorff": rel})
    return ExtractionResult(ordered, arc, catalog, partition, graph, rec, rel)
