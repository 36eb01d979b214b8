"""Acceptance gate: one test per criterion, each at its stated tolerance and
time budget.  Every test prints a PASS/FAIL line; the lines are repeated in
the terminal summary under "acceptance"."""

import math
import time
from fractions import Fraction

from coarsegeom.actions import (
    builtin_actions,
    check_char_conditions,
    cocompactness_radius,
    induced_metric,
    proper_action_check,
    stabilizer,
    translation_plane,
)
from coarsegeom.cli import main
from coarsegeom.coarse import equivalence_agreement, fit_qi_constants, group_ls_uniform_check
from coarsegeom.core_metrics import (
    LsSpace,
    check_ls_condition,
    check_pseudo_metric,
    connectivity_threshold,
    integer_line,
    is_m_connected,
    lattice_points,
)
from coarsegeom.groups import (
    DirectSum,
    FreeAbelian,
    check_properness,
    extract_generating_set,
    l1_metric,
    symmetric_chain,
    verify_generates,
    weighted_norm_metric,
    word_metric,
)
from coarsegeom.scenarios import list_scenarios
from coarsegeom.zero_dim import TriadicSpace, a_hausdorff_bound, verify_decomposition_equivalence, verify_m0_z2_equivalence


def within(start, budget):
    elapsed = time.perf_counter() - start
    assert elapsed < budget, f"took {elapsed:.2f}s, budget {budget}s"


def test_criterion_1_translation_plane_pipeline(criterion):
    with criterion(1, "Z^2 on the plane: stabilizer, |S| = 9 within 4r, cover radius^2 = 1/2, QI sqrt2", 5):
        start = time.perf_counter()
        sc = translation_plane()
        action, x0 = sc.action, sc.x0
        assert stabilizer(action, x0, 221).elements == [(0, 0)]

        rep = proper_action_check(action, x0, 1, 221)
        assert rep.exact and len(rep.S) == 9 and rep.within_4r
        assert rep.max_norm <= 4

        grid = action.space.grid(Fraction(1, 10))
        cover = cocompactness_radius(action, x0, grid, 25)
        assert cover.radius_sq == Fraction(1, 2)

        Z2 = action.group
        ball = lattice_points(2, 10)
        X = LsSpace(ball, word_metric(Z2, Z2.unit_generators(), 20).dist)
        fit = fit_qi_constants(lambda g: g, X, induced_metric(action, x0))
        assert abs(fit.lam - math.sqrt(2)) <= 1e-9
        assert fit.c <= 1e-9 and fit.verified
        within(start, 5)


def test_criterion_2_connectivity_round_trip(criterion):
    with criterion(2, "connectivity threshold 1 on Z, F = {-1,0,1}; Z_2 sum disconnected", 1):
        start = time.perf_counter()
        assert connectivity_threshold(integer_line(-50, 50)) == 1
        Z = FreeAbelian(1)
        gen = extract_generating_set(l1_metric(Z), 1, 101)
        assert sorted(gen.F) == [(-1,), (0,), (1,)]
        assert verify_generates(Z, gen.F, 101).ok

        G = DirectSum(2, offset=1, weights=lambda i: i)
        d = weighted_norm_metric(G, lambda i: i)
        for M in (1, 2, 3):
            target = G.from_support([math.ceil(M) + 1])
            ball = check_properness(d, math.ceil(M) + 2, 256, require_certificate=True).ball
            assert target in ball
            rep = is_m_connected(LsSpace(ball, d.dist), M)
            assert not rep.connected
            assert rep.gap >= M + 1 and rep.gap_witness is not None
        within(start, 1)


def test_criterion_3_orbit_conditions_match_properness(criterion):
    with criterion(3, "orbit conditions agree with properness on every built-in action", 5):
        start = time.perf_counter()
        actions = builtin_actions()
        assert len(actions) >= 4
        disagreements, infinite_stab_failing = [], False
        for name, sc in actions.items():
            rep = check_char_conditions(sc.action, sc.x0, sc.horizon, sc.radius)
            proper = check_properness(induced_metric(sc.action, sc.x0), sc.radius, sc.horizon)
            if rep.overall != proper.ok:
                disagreements.append(name)
            if not rep.finite_stabilizer and not proper.ok:
                infinite_stab_failing = True
        assert disagreements == []
        assert infinite_stab_failing
        within(start, 5)


def test_criterion_4_uniformity_criteria_agree(criterion):
    with criterion(4, "metric uniformity and the F -> E criterion agree on 3 maps", 5):
        start = time.perf_counter()
        Z = FreeAbelian(1)
        zl = l1_metric(Z)
        G = DirectSum(2, offset=1, weights=lambda i: i)
        d1 = weighted_norm_metric(G, lambda i: i)
        d2 = weighted_norm_metric(G, lambda i: 2**i)
        cases = [
            (lambda g: g, d1, d2, True),
            (lambda g: (2 * g[0],), zl, zl, True),
            (lambda g: (g[0] ** 2,), zl, zl, False),
        ]
        for f, dG, dH, expect in cases:
            for horizon in (32, 64):
                rep = equivalence_agreement(f, dG, dH, horizon, [1, 2, 3])
                assert rep.agree and rep.metric_ok == expect

        # identity map between two weightings: E = F witnesses the criterion
        for r in (2, 3, 4):
            F = d1.ball(r)
            E = group_ls_uniform_check(lambda g: g, G, G, F, 64).E
            assert set(E) == set(F)
        within(start, 5)


def test_criterion_5_flip_certificate(criterion):
    with criterion(5, "A vs Z_2 sum at N = 9: both directions, tight bounds with witnesses", 30):
        start = time.perf_counter()
        rep = verify_m0_z2_equivalence(9)
        assert rep.bijective and rep.certificate.ok
        assert rep.max_change == [3 ** (k + 1) - 1 for k in range(9)]
        assert rep.min_change == [3**i + 1 for i in range(9)]
        A = TriadicSpace(0)
        for k, (x, y) in enumerate(rep.max_witness):
            assert A.dist(x, y) == 3 ** (k + 1) - 1
            assert max(set(x.support) ^ set(y.support)) <= k
        for i, (x, y) in enumerate(rep.min_witness):
            assert A.dist(x, y) == 3**i + 1
            assert max(set(x.support) ^ set(y.support)) == i
        within(start, 30)


def test_criterion_6_a_within_bounded_distance(criterion):
    with criterion(6, "M0(-3) within 26/27 of A, attained", 5):
        start = time.perf_counter()
        rep = a_hausdorff_bound(-3, 9)
        assert rep.bound == Fraction(26, 27)
        assert rep.all_within and rep.max_distance == Fraction(26, 27)
        assert rep.witness is not None and rep.points == 2**12
        within(start, 5)


def test_criterion_7_symmetric_chain_decomposition(criterion):
    with criterion(7, "S_5 normal form: n = (1..5), bijective, 14280 pairs, both directions", 10):
        start = time.perf_counter()
        _, chain = symmetric_chain(5)
        cert = verify_decomposition_equivalence(chain, 5)
        assert cert.n == [1, 2, 3, 4, 5]
        assert cert.size == 120 and cert.bijective and cert.identity_zero
        assert cert.filtration and cert.structural and cert.ordered_pairs == 14280
        assert all(r.ok for r in cert.forward) and all(r.ok for r in cert.backward)
        assert all(cert.forward_supported) and all(cert.backward_contained)
        within(start, 10)


def test_criterion_8_axiom_suites(criterion):
    with criterion(8, "axiom suites pass on built-in spaces; planted counterexamples caught", 5):
        start = time.perf_counter()
        Z2 = FreeAbelian(2)
        G = DirectSum(2, offset=1, weights=lambda i: i)
        spaces = [
            integer_line(-30, 30),
            LsSpace([tuple(map(Fraction, p)) for p in lattice_points(2, 4)], translation_plane().action.space.dist),
            TriadicSpace(0).sample(cap=6),
            TriadicSpace(-2).sample(cap=4),
            G.as_space(weighted_norm_metric(G, lambda i: i), 32),
            Z2.as_space(word_metric(Z2, Z2.unit_generators(), 12), 41),
        ]
        for sp in spaces:
            assert check_pseudo_metric(sp).ok
            assert check_ls_condition(sp).ok

        asym = check_pseudo_metric(LsSpace(list(range(10)), lambda a, b: Fraction(a - b)))
        assert not asym.ok and asym.failure == "symmetry" and asym.witness == (0, 1)
        flat = check_ls_condition(LsSpace(lattice_points(2, 13)[:100], lambda a, b: Fraction(abs(a[0] - b[0]))))
        assert not flat.ok and flat.growing
        within(start, 5)


def test_criterion_9_determinism(criterion, tmp_path):
    with criterion(9, "byte-identical reports across runs and with --parallel"):
        for name, _ in list_scenarios():
            outs = []
            for k, extra in enumerate(([], [], ["--parallel"])):
                path = tmp_path / f"{name.replace(':', '_')}-{k}.json"
                main(["run", name, "--out", str(path), *extra])
                outs.append(path.read_bytes())
            assert outs[0] == outs[1] == outs[2], name
