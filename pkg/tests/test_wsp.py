import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from affarc.affine import AffineMap, fixed_set, inverse
from affarc.attractor import ArcApprox, arc_approx, unit_disc_normalization
from affarc.errors import BudgetExceeded, FixedPointOnArc, NoSuitableWord, NotAdvancing
from affarc.wsp import (_walk, brute_force_family, enclosing_ball, enumerate_family, epsilon_net,
                        family_element, fixed_points_on_arc, intersects_arc, min_family_distance,
                        proper_intersection, relocate_fixed_points, relocating_word, wsp_check)

from conftest import parabola_map
from oracles import family_min_distance, parameter_offsets, segment_min_distance


def parabola_piece(a, b, n=201):
    t = np.linspace(a, b, n)
    return ArcApprox(np.column_stack([t, t * t]), np.linspace(0, 1, n), np.zeros((n, 1), dtype=np.int16))


def segment(n=101):
    t = np.linspace(0, 1, n)
    return ArcApprox(np.column_stack([t, 0 * t]), t, np.zeros((n, 1), dtype=np.int16))


def keyset(elements):
    return {(e.i_word, e.j_word) for e in elements}


def test_family_contains_first_level_quotient(parabola_system):
    fam = enumerate_family(parabola_system, 2)
    e = next(e for e in fam if e.i_word == (2,) and e.j_word == (1,))
    np.testing.assert_allclose(e.map.linear, [[1, 0], [2, 1]], atol=1e-14)
    np.testing.assert_allclose(e.map.translation, [1, 1], atol=1e-14)
    assert e.dist >= 1
    assert all(e.i_word[0] != e.j_word[0] for e in fam)
    # every pair of words up to length 2 with different first letters
    assert len(fam) == 2 * 3 * 3


def test_family_order_and_recomposition(takagi_system):
    fam = enumerate_family(takagi_system, 4)
    keys = [(e.i_word, e.j_word) for e in fam]
    assert keys == sorted(keys)
    for e in fam:
        h = inverse(takagi_system.word_map(e.j_word)) @ takagi_system.word_map(e.i_word)
        assert np.abs(h.linear - e.map.linear).max() < 1e-10
        assert np.abs(h.translation - e.map.translation).max() < 1e-10


@pytest.mark.parametrize("name", ["parabola_system", "takagi_system", "overlap_system"])
@pytest.mark.parametrize("depth, radius", [(4, 0.5), (5, 1.0), (6, 0.3), (3, math.inf)])
def test_pruned_matches_brute_force(name, depth, radius, request):
    system = request.getfixturevalue(name)
    pruned = enumerate_family(system, depth, radius)
    brute = brute_force_family(system, depth, radius)
    assert keyset(pruned) == keyset(brute)
    d = {(e.i_word, e.j_word): e.dist for e in brute}
    for e in pruned:
        assert e.dist == pytest.approx(d[(e.i_word, e.j_word)], abs=1e-12)


def test_enclosing_ball_contains_attractor(takagi_zipper):
    c, r = enclosing_ball(takagi_zipper.system.maps)
    pts = arc_approx(takagi_zipper, 10).points
    assert np.hypot(*(pts - c).T).max() <= r + 1e-12


def test_budget_and_depth_limits(parabola_system):
    with pytest.raises(BudgetExceeded):
        enumerate_family(parabola_system, 6, cap=10)
    with pytest.raises(ValueError):
        enumerate_family(parabola_system, 15)


def test_overlap_family_has_small_element(overlap_system):
    fam = enumerate_family(overlap_system, 12, prune_radius=0.05)
    assert any(0 < e.dist < 0.05 for e in fam)


def test_overlap_pair_violated_and_matches_offsets(overlap_system):
    report = wsp_check(overlap_system, 0.05, 12)
    assert report.violated and report.witnesses
    dists = [w.dist for w in report.witnesses]
    assert dists == sorted(dists)
    assert all(0 < d < 0.05 for d in dists)
    # the closest element is a parameter shift by the smallest equal-length offset
    oracle = 2 * parameter_offsets(0.6, [0.0, 0.4], 12)
    assert report.witnesses[0].dist == pytest.approx(oracle, rel=1e-6)
    w = report.witnesses[0]
    assert len(w.i_word) == len(w.j_word) == 12
    payload = report.to_dict()
    assert payload["verdict"] == "violated" and len(payload["witnesses"]) == len(dists)


def test_parabola_zipper_satisfied(parabola_system):
    report = wsp_check(parabola_system, 0.5, 10)
    assert report.verdict == "satisfied-to-depth" and not report.witnesses
    # equal-length offsets are integers, so equal-length quotients are shifts by at least 1
    assert 2 * parameter_offsets(0.5, [0.0, 0.5], 8) == pytest.approx(2.0)
    oracle = family_min_distance(parabola_system.maps, 8)
    assert min_family_distance(parabola_system, 8) == pytest.approx(oracle, rel=1e-9)
    assert oracle == pytest.approx(0.9526540980792869, rel=1e-12)


def test_takagi_satisfied(takagi_system):
    report = wsp_check(takagi_system, 0.2, 10)
    assert report.verdict == "satisfied-to-depth"


def test_epsilon_zero_is_vacuous(overlap_system):
    assert not wsp_check(overlap_system, 0.0, 12).violated


@pytest.mark.parametrize("eps", [0.02, 0.05])
def test_violation_monotone_in_depth(overlap_system, eps):
    seen = False
    for depth in range(6, 13):
        v = wsp_check(overlap_system, eps, depth).violated
        assert v or not seen
        seen = seen or v
    assert seen


def test_intersects_arc_examples(parabola_arc):
    assert intersects_arc(AffineMap.identity(), parabola_arc)
    seg = segment()
    assert not intersects_arc(AffineMap.translation_by([10, 0]), seg)
    assert intersects_arc(parabola_map(1, 0.1), parabola_arc)
    assert not intersects_arc(parabola_map(1, 1.5), parabola_arc)


def test_intersects_arc_matches_sampling(takagi_arc):
    rng = np.random.default_rng(3)
    coarse = ArcApprox(takagi_arc.points[::64], takagi_arc.params[::64], takagi_arc.addresses[::64])
    tol = 0.01
    for _ in range(10):
        h = AffineMap(np.eye(2) + rng.normal(0, 0.1, (2, 2)), rng.normal(0, 0.3, 2))
        d = segment_min_distance(h(coarse.points), coarse.points, samples=50)
        if abs(d - tol) > 2e-3:
            assert intersects_arc(h, coarse, tol) == (d <= tol)


def test_proper_intersection_examples():
    res = proper_intersection(parabola_piece(0, 0.5), parabola_piece(0.4, 1))
    assert res.proper
    xs = sorted([res.component[0][0], res.component[1][0]])
    assert xs == pytest.approx([0.4, 0.5], abs=1e-2)
    assert not proper_intersection(parabola_piece(0, 0.4), parabola_piece(0.6, 1)).proper
    assert not proper_intersection(parabola_piece(0, 0.5), parabola_piece(0.2, 0.3)).proper
    assert not proper_intersection(parabola_piece(0.2, 0.3), parabola_piece(0, 0.5)).proper


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_proper_intersection_symmetric(a, b, c, d):
    a, b = sorted((a, b))
    c, d = sorted((c, d))
    if b - a < 0.05 or d - c < 0.05:
        return
    p, q = parabola_piece(a, b), parabola_piece(c, d)
    assert proper_intersection(p, q).proper == proper_intersection(q, p).proper


def test_fixed_points_on_arc(parabola_arc):
    f = AffineMap(0.9 * np.eye(2), [0.1, 0])
    assert not fixed_points_on_arc(f, parabola_arc)
    assert fixed_points_on_arc(AffineMap(0.9 * np.eye(2), [0, 0]), parabola_arc)
    assert not fixed_points_on_arc(AffineMap.translation_by([0.01, 0]), parabola_arc)
    # a fixed line crossing the arc
    assert fixed_points_on_arc(AffineMap(np.diag([1, 0.9]), [0, 0.05]), parabola_arc)


def test_net_translation_on_segment():
    net = epsilon_net(AffineMap.translation_by([0.1, 0]), segment())
    assert net.N == 10
    np.testing.assert_allclose(net.points, np.column_stack([0.1 * np.arange(11), np.zeros(11)]), atol=1e-12)


def test_net_parabola_shift(parabola_arc):
    net = epsilon_net(parabola_map(1, 0.1), parabola_arc)
    n = np.arange(11)
    assert net.N == 10
    np.testing.assert_allclose(net.points, np.column_stack([0.1 * n, 0.01 * n * n]), atol=1e-12)
    assert net.hausdorff_to(parabola_arc) <= net.sigma_diameters(parabola_arc).max()


@pytest.mark.parametrize("c", [0.1, 0.05, 0.025])
def test_net_shrinks_with_shift(parabola_arc, c):
    net = epsilon_net(parabola_map(1, c), parabola_arc)
    n = round(1 / c)
    assert net.N == n
    # closed forms: the orbit is (kc, (kc)^2) and the depth-10 vertices are (k/1024, (k/1024)^2)
    t = np.arange(1025) / 1024
    curve = np.column_stack([t, t * t])
    orbit = np.column_stack([c * np.arange(n + 1), (c * np.arange(n + 1)) ** 2])
    gap = np.max(np.min(np.hypot(curve[:, None, 0] - orbit[None, :, 0], curve[:, None, 1] - orbit[None, :, 1]), axis=1))
    assert net.hausdorff_to(parabola_arc) == pytest.approx(gap, rel=1e-9)
    chords = np.hypot(*np.diff(orbit, axis=0).T)
    assert net.sigma_diameters(parabola_arc).max() == pytest.approx(chords.max(), rel=1e-9)
    assert net.hausdorff_to(parabola_arc) <= net.sigma_diameters(parabola_arc).max()


def test_sigma_arcs_disjoint(parabola_arc):
    net = epsilon_net(parabola_map(1, 0.07), parabola_arc)
    xs = np.array([[p[0], q[0]] for p, q in net.sigma_arcs])
    assert np.all(xs[:, 1] > xs[:, 0])
    assert np.all(xs[1:, 0] >= xs[:-1, 1] - 1e-12)


def test_net_errors(parabola_arc):
    with pytest.raises(FixedPointOnArc):
        epsilon_net(AffineMap(0.9 * np.eye(2), [0.05, 0.025]), parabola_arc)
    with pytest.raises(NotAdvancing):
        _walk(AffineMap.identity(), (0.5, 0), segment(), 1e-3, +1, 10)


def test_conjugation_identity():
    rng = np.random.default_rng(8)
    for _ in range(20):
        p = rng.uniform(-1, 1, 2)
        f = AffineMap(0.8 * np.eye(2), 0.2 * p)
        g = AffineMap(rng.uniform(-2, 2, (2, 2)) + 3 * np.eye(2), rng.uniform(-1, 1, 2))
        h = inverse(g) @ f @ g
        _, q, _ = fixed_set(h)
        np.testing.assert_allclose(q, inverse(g)(p), atol=1e-9)
        np.testing.assert_allclose(np.sort_complex(np.linalg.eigvals(h.linear)),
                                   np.sort_complex(np.linalg.eigvals(f.linear)), atol=1e-9)


def test_relocation_on_parabola(parabola_system, parabola_arc):
    # parabola-preserving contraction fixing the interior point (0.5, 0.25)
    f = parabola_map(0.9, 0.05)
    _, p, _ = fixed_set(f)
    np.testing.assert_allclose(p, [0.5, 0.25], atol=1e-12)
    w = relocating_word([f], parabola_system, parabola_arc)
    g = parabola_system.word_map(w)
    (h,) = relocate_fixed_points([f], parabola_system, parabola_arc)
    _, q, _ = fixed_set(h)
    np.testing.assert_allclose(q, inverse(g)(p), atol=1e-9)
    T = unit_disc_normalization(parabola_arc.points)
    assert np.hypot(*T(q)) > 1
    # S1 S1 also works and gives the expected image
    g2 = parabola_system.word_map((1, 1))
    assert np.hypot(*T(inverse(g2)(p))) > 1


def test_relocation_failure(parabola_system, parabola_arc):
    # with no words to try the search must give up
    f = AffineMap(0.9 * np.eye(2), [0.05, 0.025])
    with pytest.raises(NoSuitableWord):
        relocating_word([f], parabola_system, parabola_arc, max_depth=0)


def test_family_element_words(parabola_system):
    e = family_element(parabola_system, (1, 2), (2,))
    assert e.i_word == (1, 2) and e.j_word == (2,)
    assert e.dist == pytest.approx(max(np.linalg.norm(e.map.linear - np.eye(2), 2), np.hypot(*e.map.translation)))

