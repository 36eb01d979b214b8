from fractions import Fraction

import mpmath
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from coarsegeom.core_metrics import (
    HorizonExceeded,
    LsSpace,
    Root,
    check_ls_condition,
    check_pseudo_metric,
    connectivity_threshold,
    exact_sqrt,
    find_chain,
    integer_line,
    is_m_connected,
    lattice_points,
    triangle_holds,
)
from coarsegeom.groups import FreeAbelian, word_metric
from coarsegeom.zero_dim import TriadicSpace

rationals = st.fractions(min_value=0, max_value=50, max_denominator=20)


def euclid_plane(pts):
    return LsSpace(pts, lambda p, q: exact_sqrt(sum((a - b) ** 2 for a, b in zip(p, q))), "E2")


# --- exact values ---------------------------------------------------------


def test_exact_sqrt_returns_fraction_for_squares():
    assert exact_sqrt(Fraction(9, 4)) == Fraction(3, 2)
    assert isinstance(exact_sqrt(Fraction(9, 4)), Fraction)
    assert isinstance(exact_sqrt(2), Root)


def test_root_ordering_against_rationals():
    r2 = exact_sqrt(2)
    assert 1 < r2 < Fraction(3, 2)
    assert r2 <= 4 and not r2 >= 2
    assert max([Fraction(1), r2, Fraction(7, 5)]) == r2
    assert sorted([Fraction(3, 2), r2, 1]) == [1, r2, Fraction(3, 2)]


@settings(max_examples=300)
@given(rationals, rationals, rationals)
def test_triangle_holds_matches_high_precision(a2, b2, c2):
    mpmath.mp.dps = 60
    sa, sb, sc = (mpmath.sqrt(mpmath.mpf(x.numerator) / x.denominator) for x in (a2, b2, c2))
    gap = sa + sb - sc
    assume(abs(gap) > mpmath.mpf(10) ** -40)
    assert triangle_holds(exact_sqrt(a2), exact_sqrt(b2), exact_sqrt(c2)) == (gap > 0)


def test_triangle_holds_at_exact_ties():
    # sqrt2 + sqrt8 == sqrt18
    assert triangle_holds(exact_sqrt(2), exact_sqrt(8), exact_sqrt(18))
    assert not triangle_holds(exact_sqrt(2), exact_sqrt(8), exact_sqrt(Fraction(18) + Fraction(1, 10**12)))


# --- pseudo-metric axioms --------------------------------------------------


def test_euclidean_lattice_sample_passes():
    pts = [tuple(map(Fraction, p)) for p in lattice_points(2, 5)][:50]
    rep = check_pseudo_metric(euclid_plane(pts))
    assert rep.ok
    assert rep.checked == 50**3


def test_signed_difference_fails_symmetry_with_witness():
    space = LsSpace(list(range(10)), lambda p, q: Fraction(p - q))
    rep = check_pseudo_metric(space)
    assert not rep.ok
    assert rep.failure == "symmetry"
    assert rep.witness == (0, 1)


def test_m0_supports_up_to_5_pass_exhaustively():
    space = TriadicSpace(0).sample(cap=6)
    assert space.horizon == 64
    assert check_pseudo_metric(space).ok


def test_horizon_exceeded():
    with pytest.raises(HorizonExceeded):
        check_pseudo_metric(integer_line(0, 5), 10)


# --- ls-condition ----------------------------------------------------------


def test_m0_zero_classes_are_singletons():
    rep = check_ls_condition(TriadicSpace(0).sample(cap=6))
    assert rep.ok and rep.max_class_size == 1
    assert set(rep.class_sizes) == {1}


def test_flat_pseudometric_zero_class_grows():
    pts = lattice_points(2, 13)[:100]
    space = LsSpace(pts, lambda p, q: Fraction(abs(p[0] - q[0])))
    rep = check_ls_condition(space)
    assert rep.class_sizes[0] >= 10
    assert not rep.ok
    assert (0, 0) in rep.growing


def test_dsum2_support_weight_zero_classes():
    from coarsegeom.groups import DirectSum, weighted_norm_metric

    G = DirectSum(2, offset=1, weights=lambda i: i)
    rep = check_ls_condition(G.as_space(weighted_norm_metric(G, lambda i: i), 32))
    assert rep.ok and rep.max_class_size == 1


@given(st.lists(st.integers(-20, 20), min_size=1, max_size=15, unique=True))
def test_true_metric_has_singleton_classes(pts):
    rep = check_ls_condition(LsSpace(pts, lambda a, b: Fraction(abs(a - b))))
    assert rep.max_class_size == 1


# --- connectivity ----------------------------------------------------------


def test_z_connected_at_one():
    space = integer_line(-49, 50)
    assert space.horizon == 100
    assert is_m_connected(space, 1).connected


def test_z_singletons_at_half():
    rep = is_m_connected(integer_line(-49, 50), Fraction(1, 2))
    assert len(rep.components) == 100


def test_a_supports_0_to_3_gap_between_8_and_18():
    A = TriadicSpace(0)
    space = A.sample(cap=4)
    assert [p.value for p in space.points[:8]] == [0, 2, 6, 8, 18, 20, 24, 26]
    rep = is_m_connected(space, 4)
    assert not rep.connected
    assert rep.gap == 10
    assert {p.value for p in rep.gap_witness} == {8, 18}


def test_connectivity_threshold_of_z():
    assert connectivity_threshold(integer_line(-50, 50)) == 1


@settings(max_examples=60)
@given(st.lists(st.integers(-30, 30), min_size=2, max_size=12, unique=True), rationals, rationals)
def test_connectedness_monotone_in_M(pts, m1, m2):
    assume(m1 > 0 and m2 > 0)
    lo, hi = sorted((m1, m2))
    space = LsSpace(pts, lambda a, b: Fraction(abs(a - b)))
    if is_m_connected(space, lo).connected:
        assert is_m_connected(space, hi).connected


@settings(max_examples=60)
@given(st.lists(st.integers(-30, 30), min_size=2, max_size=12, unique=True), st.integers(1, 8), st.data())
def test_find_chain_iff_same_component(pts, M, data):
    space = LsSpace(pts, lambda a, b: Fraction(abs(a - b)))
    a, b = data.draw(st.sampled_from(pts)), data.draw(st.sampled_from(pts))
    comps = is_m_connected(space, M).components
    same = any(a in c and b in c for c in comps)
    chain = find_chain(space, a, b, M)
    assert (chain is not None) == same
    if chain:
        assert chain.points[0] == a and chain.points[-1] == b
        assert all(abs(p - q) <= M for p, q in zip(chain.points, chain.points[1:]))


# --- chains ----------------------------------------------------------------


def test_chain_on_z():
    space = integer_line(-10, 10)
    assert find_chain(space, 0, 3, 1).points == (0, 1, 2, 3)
    assert find_chain(space, 0, 3, Fraction(1, 2)) is None


def _bfs_hops(start, goal, step):
    # independent oracle: grid BFS with unit moves
    from collections import deque

    seen, q = {start: 0}, deque([start])
    while q:
        p = q.popleft()
        if p == goal:
            return seen[p]
        for s in step:
            n = (p[0] + s[0], p[1] + s[1])
            if n not in seen and abs(n[0]) + abs(n[1]) <= 6:
                seen[n] = seen[p] + 1
                q.append(n)


def test_chain_on_z2_word_metric():
    Z2 = FreeAbelian(2)
    wm = word_metric(Z2, Z2.unit_generators(), 12)
    space = Z2.as_space(wm, 85)
    chain = find_chain(space, (0, 0), (2, 1), 1)
    assert len(chain) == 4
    assert len(chain) - 1 == _bfs_hops((0, 0), (2, 1), Z2.unit_generators())


def test_squared_difference_fails_triangle():
    rep = check_pseudo_metric(LsSpace(list(range(5)), lambda p, q: Fraction((p - q) ** 2)))
    assert not rep.ok and rep.failure == "triangle"
    x, y, z = rep.witness
    assert (x - z) ** 2 > (x - y) ** 2 + (y - z) ** 2


def test_root_valued_triangle_failure():
    # d = |p - q|^(3/2): d(0, 2) = sqrt 8 > d(0, 1) + d(1, 2) = 2
    rep = check_pseudo_metric(LsSpace([0, 1, 2], lambda p, q: exact_sqrt(abs(p - q) ** 3)))
    assert not rep.ok and rep.failure == "triangle"
    assert set(rep.witness) == {0, 1, 2}
