import json

import numpy as np
import pytest

from affarc.attractor import ArcApprox, IfsSystem, Zipper, arc_approx, build_arc, locate, point_set_diameter
from affarc.errors import IsParabolic, NotAChain, Reducible
from affarc.multizipper import (MultizipperGraph, PartitionP, build_catalog, check_c1, check_c2,
                                extract_multizipper, images_equal_or_disjoint, order_and_check,
                                prune_to_finite, reconstruct, refine_and_build_graph,
                                verify_b_properties)

from conftest import TAKAGI_NODES, parabola_map, takagi_maps

Z1 = np.array(TAKAGI_NODES[1])


@pytest.fixture(scope="module")
def takagi():
    system = IfsSystem(takagi_maps())
    arc = arc_approx(Zipper(system, TAKAGI_NODES), 11)
    catalog = build_catalog(system, arc, 6)
    partition = prune_to_finite(catalog, system, arc)
    graph = refine_and_build_graph(partition, system, arc)
    return system, arc, catalog, partition, graph


def same_maps(a, b):
    return all(f.allclose(g, 1e-14) for f, g in zip(a.maps, b.maps))


def test_order_recovers_chain(takagi_system, takagi_arc):
    shuffled = takagi_system.permuted([1, 0])
    assert same_maps(order_and_check(shuffled, takagi_arc), takagi_system)
    assert same_maps(order_and_check(takagi_system, takagi_arc), takagi_system)


def test_reducible_system(parabola_system, parabola_arc):
    s1, s2 = parabola_system.maps
    with pytest.raises(Reducible):
        order_and_check(IfsSystem([s1, s2, s1 @ s1]), parabola_arc)


def test_not_a_chain(takagi_system):
    # an arc that none of the pieces starts from
    t = np.linspace(0, 1, 65)
    arc = ArcApprox(np.column_stack([t, 1 + 0 * t]), t, np.zeros((65, 1), dtype=np.int16))
    with pytest.raises(NotAChain):
        order_and_check(takagi_system, arc)


def test_catalog_depth3(takagi_system, takagi_arc):
    cat = build_catalog(takagi_system, takagi_arc, 3)
    assert np.min(np.hypot(*(cat.points - Z1).T)) < 1e-9
    assert np.all(np.diff(cat.positions) > 0)
    s1 = takagi_system.maps[0]
    a1 = takagi_arc.a1
    for n in (2, 3):
        q = a1
        for _ in range(n):
            q = s1(q)
        assert np.min(np.hypot(*(cat.points - q).T)) < 1e-9


def test_catalog_accumulates_only_at_ends(takagi_system, takagi_arc):
    cat = build_catalog(takagi_system, takagi_arc, 6)
    s1, s2 = takagi_system.maps
    a0, a1 = takagi_arc.a0, takagi_arc.a1
    # the marked points are exactly S1^n(a1) and S2^n(a0), n = 1..6
    expected = []
    for f, start in ((s1, a1), (s2, a0)):
        q = start
        for _ in range(6):
            q = f(q)
            expected.append(q)
    expected = np.unique(np.round(expected, 12), axis=0)
    assert len(cat) == len(expected)
    for q in expected:
        assert np.min(np.hypot(*(cat.points - q).T)) < 1e-9
    # S1 fixes a0 and S2 fixes a1, so distance to the near end shrinks by the Lipschitz constant per level
    lip = max(f.lipschitz for f in takagi_system.maps)
    d1 = np.hypot(*(Z1 - a0))
    for p, level in zip(cat.points, cat.levels):
        assert min(np.hypot(*(p - a0)), np.hypot(*(p - a1))) <= d1 * lip ** (level - 1) + 1e-12


def test_catalog_rejects_parabolic_arcs(parabola_system, parabola_arc, overlap_system):
    with pytest.raises(IsParabolic):
        build_catalog(parabola_system, parabola_arc, 3)
    arc, _ = build_arc(overlap_system, 10)
    with pytest.raises(IsParabolic):
        build_catalog(overlap_system, arc, 3)


def test_b_properties(takagi):
    system, arc, catalog, _, _ = takagi
    report = verify_b_properties(catalog, system, arc)
    assert report.ok and not report.b2_violations


def test_b1_detects_deleted_point(takagi):
    system, arc, catalog, _, _ = takagi
    k = int(np.argmin(np.hypot(*(catalog.points - Z1).T)))
    report = verify_b_properties(catalog.without(k), system, arc)
    assert not report.ok
    expected = system.maps[0](Z1)
    assert any(w == (1,) and np.hypot(*(p - expected)) < 1e-9 for w, p in report.b1_violations)


def test_partition_takagi(takagi):
    system, arc, _, partition, _ = takagi
    np.testing.assert_allclose(partition.points, TAKAGI_NODES, atol=1e-12)
    assert len(partition.subarcs) == 2
    assert np.all(np.diff(partition.positions) > 0)
    tol = 1e-7 * arc.diameter
    assert check_c1(partition.points, system, arc, tol) == []
    assert check_c2(partition.points, system, arc, tol) == []


def test_c1_detects_missing_preimage(takagi):
    system, arc, _, _, _ = takagi
    s1 = system.maps[0]
    pts = np.array([arc.a0, s1(s1(Z1)), Z1, arc.a1])
    bad = check_c1(pts, system, arc, 1e-7 * arc.diameter)
    assert bad and bad[0][0] == 1


def test_graph_takagi(takagi):
    _, arc, _, _, graph = takagi
    assert [v.id for v in graph.vertices] == [1, 2]
    edges = {(e.source, e.target, e.map_index) for e in graph.edges}
    assert edges == {(1, 1, 1), (1, 2, 1), (2, 1, 2), (2, 2, 2)}
    for v in (1, 2):
        assert len(graph.out_edges(v)) == 2
    assert images_equal_or_disjoint(graph, arc)


def test_graph_coverage_intervals(takagi):
    _, arc, _, _, graph = takagi
    verts = {v.id: v for v in graph.vertices}
    for v in graph.vertices:
        spans = []
        for e in graph.out_edges(v.id):
            t = verts[e.target]
            a, b = locate(arc, e.map(t.start))[0], locate(arc, e.map(t.end))[0]
            spans.append(sorted((a, b)))
        spans.sort()
        lo, hi = locate(arc, v.start)[0], locate(arc, v.end)[0]
        assert spans[0][0] == pytest.approx(lo, abs=1e-6)
        assert spans[-1][1] == pytest.approx(hi, abs=1e-6)
        for (a, b), (c, d) in zip(spans, spans[1:]):
            assert b == pytest.approx(c, abs=1e-6)


def test_single_piece_graph_is_the_zipper(takagi_zipper):
    system = takagi_zipper.system
    arc = arc_approx(takagi_zipper, 11)
    part = PartitionP(np.stack([arc.a0, arc.a1]), np.array([0.0, len(arc) - 1.0]))
    graph = refine_and_build_graph(part, system, arc)
    assert len(graph.vertices) == 1 and len(graph.edges) == 2
    assert all(e.source == e.target == 1 for e in graph.edges)
    for depth in (0, 3, 7):
        rec = reconstruct(graph, depth)
        np.testing.assert_allclose(rec.arc.points, arc_approx(takagi_zipper, depth).points if depth else
                                   np.stack([arc.a0, arc.a1]), atol=1e-12)


def test_reconstruction_converges(takagi):
    _, arc, _, _, graph = takagi
    dists = [reconstruct(graph, d, reference=arc).hausdorff for d in range(0, 11)]
    assert all(b < a for a, b in zip(dists, dists[1:]))
    assert dists[-1] < 1e-3 * arc.diameter
    pieces = [point_set_diameter(arc.points[arc.points[:, 0] <= 0.5]),
              point_set_diameter(arc.points[arc.points[:, 0] >= 0.5])]
    assert dists[0] <= max(pieces)


def test_extract_takagi(takagi_system):
    res = extract_multizipper(takagi_system.permuted([1, 0]), depth=10)
    assert len(res.graph.vertices) == 2 and len(res.graph.edges) == 4
    assert res.relative_hausdorff < 1e-3


def test_extract_parabola_rejected(parabola_system):
    with pytest.raises(IsParabolic):
        extract_multizipper(parabola_system)


def test_graph_json_round_trip(takagi):
    graph = takagi[4]
    data = json.loads(graph.to_json())
    back = MultizipperGraph.from_dict(data)
    assert back.to_dict() == data
    e = data["edges"][0]
    assert len(e["coefficients"]) == 2 and len(e["coefficients"][0]) == 3


def test_thread_count_does_not_change_catalog(takagi_system, takagi_arc, monkeypatch):
    a = build_catalog(takagi_system, takagi_arc, 5)
    monkeypatch.setenv("AFFARC_THREADS", "4")
    b = build_catalog(takagi_system, takagi_arc, 5)
    np.testing.assert_array_equal(a.points, b.points)


def test_parabola_map_helper_is_affine():
    f = parabola_map(0.5, 0.5)
    t = 0.3
    np.testing.assert_allclose(f([t, t * t]), [0.5 * t + 0.5, (0.5 * t + 0.5) ** 2])
