"""Built-in scenarios, the runner and the JSON report format."""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable

from . import __version__
from .actions import (
    ActionScenario,
    builtin_actions,
    check_char_conditions,
    cocompactness_radius,
    induced_metric,
    proper_action_check,
    stabilizer,
    translation_line,
    translation_plane,
)
from .coarse import (
    BALL_INEQUALITY,
    CONTROL_INEQUALITY,
    coarse_equivalence_certificate,
    equivalence_agreement,
    fit_qi_constants,
)
from .core_metrics import (
    LsSpace,
    Root,
    check_ls_condition,
    check_pseudo_metric,
    connectivity_threshold,
    integer_line,
    is_m_connected,
    lattice_points,
    to_text,
)
from .groups import (
    DirectSum,
    FreeAbelian,
    check_left_invariance,
    check_properness,
    cyclic_tower,
    extract_generating_set,
    l1_metric,
    symmetric_chain,
    verify_generates,
    weighted_norm_metric,
    word_metric,
)
from .zero_dim import TriadicPoint, TriadicSpace, a_hausdorff_bound, verify_decomposition_equivalence, verify_m0_z2_equivalence

HORIZON_STATEMENT = "Every verdict is claimed only for the stated finite samples (horizons), not for the infinite objects."

PARAM_CAPS = {
    "horizon": 5000,
    "support_cap": 10,
    "kmax": 5,
}


class InvalidScenario(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class CheckResult:
    verdict: str  # pass | fail | not-applicable
    payload: dict = field(default_factory=dict)
    reason: str = ""


def verdict(ok: bool, payload: dict | None = None, reason: str = "") -> CheckResult:
    return CheckResult("pass" if ok else "fail", payload or {}, reason)


@dataclass
class Check:
    name: str
    anchor: str
    run: Callable[[dict], CheckResult]


@dataclass
class Scenario:
    name: str
    description: str
    params: dict
    checks: list[Check]

    def with_overrides(self, params: dict | None = None, checks: list[str] | None = None) -> "Scenario":
        merged = dict(self.params)
        for key, value in (params or {}).items():
            if key not in self.params:
                raise InvalidScenario(key, f"not a parameter of {self.name}")
            merged[key] = value
        _validate_params(merged)
        chosen = self.checks
        if checks is not None:
            by_name = {c.name: c for c in self.checks}
            for name in checks:
                if name not in by_name:
                    raise InvalidScenario("checks", f"unknown check {name!r}")
            chosen = [by_name[name] for name in checks]
        return Scenario(self.name, self.description, merged, chosen)


def _validate_params(params: dict) -> None:
    for key, value in params.items():
        if key in ("horizon", "support_cap", "kmax", "qi_radius"):
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise InvalidScenario(key, "must be a positive integer")
            if value > PARAM_CAPS.get(key, math.inf):
                raise InvalidScenario(key, f"above cap {PARAM_CAPS[key]}")
        elif key in ("radius", "tolerance"):
            try:
                v = Fraction(value)
            except (TypeError, ValueError):
                raise InvalidScenario(key, "must be a number") from None
            if v <= 0:
                raise InvalidScenario(key, "must be positive")


# ---------------------------------------------------------------------------
# serialization


def jsonable(obj: Any) -> Any:
    if isinstance(obj, (Fraction, Root)):
        return to_text(obj)
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return repr(obj)
    if isinstance(obj, TriadicPoint):
        return {"support": list(obj.support), "value": to_text(obj.value)}
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (set, frozenset)):
        return sorted((jsonable(v) for v in obj), key=json.dumps)
    return str(obj)


# ---------------------------------------------------------------------------
# check builders


def _action_checks(make: Callable[[], ActionScenario], qi: bool, grid_step=Fraction(1, 10)) -> list[Check]:
    """The full pipeline for a translation action on Euclidean space."""

    def axioms(p):
        sc = make()
        reps = sc.action.verify_axioms(25, sc.points)
        inv = check_left_invariance(induced_metric(sc.action, sc.x0), 13)
        ok = all(r.ok for r in reps.values()) and inv.ok
        payload = {k: {"ok": r.ok, "checked": r.checked, "witness": r.witness} for k, r in reps.items()}
        payload["induced_left_invariance"] = {"ok": inv.ok, "triples": inv.checked}
        return verdict(ok, payload)

    def stab(p):
        sc = make()
        rep = stabilizer(sc.action, sc.x0, p["horizon"])
        return verdict(rep.ok, {"elements": rep.elements, "status": rep.status, "horizon": rep.horizon})

    def orbit_conditions(p):
        sc = make()
        return _orbit_conditions_result(sc, p["horizon"], sc.radius)

    def proper(p):
        sc = make()
        rep = proper_action_check(sc.action, sc.x0, Fraction(p["radius"]), p["horizon"])
        ok = rep.within_4r and rep.stabilized and rep.exact
        return verdict(ok, {
            "r": rep.r, "S": rep.S, "size": len(rep.S), "predicate": rep.predicate,
            "bound_4r": 4 * rep.r, "max_induced_norm": rep.max_norm, "within_4r": rep.within_4r,
            "status": rep.status, "horizon": rep.horizon,
        })

    def cover(p):
        sc = make()
        grid = sc.action.space.grid(grid_step)
        rep = cocompactness_radius(sc.action, sc.x0, grid, 25)
        return verdict(rep.radius is not None, {
            "radius": rep.radius, "radius_squared": rep.radius_sq, "witness": rep.witness,
            "sample": f"grid step {to_text(grid_step)} on the unit cell", "sample_size": rep.sample_size,
            "orbit_horizon": rep.horizon,
        })

    def fin_gen(p):
        sc = make()
        metric = induced_metric(sc.action, sc.x0)
        n = p["horizon"]
        space = sc.action.group.as_space(metric, n)
        M = connectivity_threshold(space)
        gen = extract_generating_set(metric, M, n)
        rep = verify_generates(sc.action.group, gen.F, n)
        ok = rep.ok and gen.M_back <= gen.M + 1
        return verdict(ok, {
            "connectivity_threshold": M, "F": gen.F, "M_back": gen.M_back, "generates": rep.ok,
            "reached": rep.reached, "ball": BALL_INEQUALITY,
        })

    def qi_fit(p):
        sc = make()
        G = sc.action.group
        k = p["qi_radius"]
        wm = word_metric(G, G.unit_generators(), 2 * k)
        ball = lattice_points(G.rank, k)
        X = LsSpace(ball, wm.dist, "word ball")
        fit = fit_qi_constants(lambda g: g, X, induced_metric(sc.action, sc.x0), d_min=1, tolerance=float(p["tolerance"]))
        return verdict(fit.verified, {
            "lambda": fit.lam, "lambda_squared": fit.lam_sq, "C": fit.c, "tolerance": fit.tolerance,
            "pairs": fit.pairs, "word_radius": k, "assumption": "model space is geodesic by construction (not certified)",
        })

    checks = [
        Check("action-axioms", "isometric action: identity, compatibility, isometry", axioms),
        Check("stabilizer", "orbit characterization: finite stabilizer", stab),
        Check("orbit-characterization", "orbit characterization of proper ls-metrics vs properness", orbit_conditions),
        Check("proper-action-4r", "proper action: g.U meets U implies d(1,g) <= r+2r+r = 4r", proper),
        Check("cocompactness-radius", "cocompact: X within bounded distance of the orbit", cover),
        Check("finite-generation", "metric connectedness <-> finite generation, F = B(1, M+1)", fin_gen),
    ]
    if qi:
        checks.append(Check("qi-fit", "coarse equivalence between geodesic spaces is a quasi-isometry", qi_fit))
    return checks


def _orbit_conditions_result(sc: ActionScenario, horizon: int, radius) -> CheckResult:
    rep = check_char_conditions(sc.action, sc.x0, horizon, radius)
    ok = rep.agree and rep.overall == sc.expect_proper
    payload = {
        "finite_stabilizer": rep.finite_stabilizer,
        "stabilizer_status": rep.stabilizer.status,
        "stabilizer_size": len(rep.stabilizer.elements),
        "discrete_orbit": rep.discrete_orbit,
        "min_gap": rep.orbit.min_gap,
        "half_horizon_min_gap": rep.orbit.half_min_gap,
        "single_point_orbit": rep.orbit.single_point,
        "bounded_discrete_finite": rep.bounded_discrete_finite,
        "count_within_radius": rep.orbit.count_within,
        "half_horizon_count": rep.orbit.half_count_within,
        "conditions_verdict": rep.overall,
        "induced_metric_proper": rep.properness.ok,
        "properness_status": rep.properness.status,
        "agree": rep.agree,
        "expected_proper": sc.expect_proper,
        "radius": Fraction(radius),
        "horizon": horizon,
        "isometric": sc.action.isometric,
        "notes": sc.action.notes,
    }
    return verdict(ok, payload, "" if ok else "conditions and properness disagree, or unexpected outcome")


def _orbit_scenario(name: str, description: str) -> Scenario:
    def run(p):
        sc = builtin_actions()[name]
        return _orbit_conditions_result(sc, p["horizon"], Fraction(p["radius"]))

    def stab(p):
        sc = builtin_actions()[name]
        rep = stabilizer(sc.action, sc.x0, p["horizon"])
        return verdict(rep.ok == sc.expect_finite_stabilizer, {
            "elements": rep.elements, "status": rep.status, "finite": rep.ok, "expected_finite": sc.expect_finite_stabilizer,
        })

    sc = builtin_actions()[name]
    return Scenario(
        f"lemma7:{name}",
        description,
        {"horizon": sc.horizon, "radius": sc.radius},
        [
            Check("stabilizer", "orbit characterization: finite stabilizer", stab),
            Check("orbit-characterization", "orbit characterization of proper ls-metrics vs properness", run),
        ],
    )


def _dsum(weights):
    G = DirectSum(2, offset=1, weights=lambda i: i)
    return G, weighted_norm_metric(G, weights)


def _two_metrics() -> Scenario:
    def cert(p):
        G, d1 = _dsum(lambda i: i)
        d2 = weighted_norm_metric(G, lambda i: 2**i)
        n = p["horizon"]
        X, Y = G.as_space(d1, n), G.as_space(d2, n)
        c = coarse_equivalence_certificate(lambda g: g, lambda g: g, X, Y)
        return verdict(c.ok, _cert_payload(c))

    def agreement(p):
        G, d1 = _dsum(lambda i: i)
        d2 = weighted_norm_metric(G, lambda i: 2**i)
        rep = equivalence_agreement(lambda g: g, d1, d2, p["horizon"], [1, 2, 3, 4])
        ok = rep.agree and rep.metric_ok and all(r.e_within_f for r in rep.rows)
        return verdict(ok, _agreement_payload(rep))

    return Scenario(
        "two-metrics:dsum2",
        "identity between support-weight metrics w_i = i and w_i = 2^i on the Z_2 direct sum",
        {"horizon": 64},
        [
            Check("coarse-certificate", "any two proper left-invariant ls-metrics: identity is a coarse equivalence", cert),
            Check("e-equals-f", "ls-uniformity: F->E criterion, E = F for the identity", agreement),
        ],
    )


def _cert_payload(c) -> dict:
    return {
        "verdict": c.verdict,
        "inequality": CONTROL_INEQUALITY,
        "forward": c.forward.rows[:12],
        "backward": c.backward.rows[:12],
        "forward_rows": len(c.forward.rows),
        "backward_rows": len(c.backward.rows),
        "forward_stable": c.forward_stable,
        "backward_stable": c.backward_stable,
        "displacement_fwd": c.displacement_fwd,
        "displacement_bwd": c.displacement_bwd,
        "displacement_stable": c.displacement_stable,
        "stability_radii_fwd": c.check_radii_fwd,
        "stability_radii_bwd": c.check_radii_bwd,
        "horizon": c.horizon,
        "pairs": c.forward.pairs,
    }


def _agreement_payload(rep) -> dict:
    return {
        "metric_criterion": rep.metric_ok,
        "f_to_e_criterion": rep.fe_ok,
        "agree": rep.agree,
        "horizon": rep.horizon,
        "ball": BALL_INEQUALITY,
        "rows": [
            {
                "r": row.r, "F_size": row.F_size, "E_size": len(row.E.E), "E_status": row.E.status,
                "max_E_norm": row.max_E_norm, "control_s": row.control_s, "e_within_f": row.e_within_f,
            }
            for row in rep.rows
        ],
    }


def _connectivity() -> Scenario:
    def z_line(p):
        space = integer_line(-50, 50)
        M = connectivity_threshold(space)
        Z = FreeAbelian(1)
        gen = extract_generating_set(l1_metric(Z), M, p["horizon"])
        rep = verify_generates(Z, gen.F, p["horizon"])
        ok = M == 1 and sorted(gen.F) == [(-1,), (0,), (1,)] and rep.ok and gen.M_back <= M + 1
        return verdict(ok, {"threshold": M, "F": sorted(gen.F), "M_back": gen.M_back, "generates": rep.ok, "horizon": p["horizon"]})

    def dsum(p):
        rows, ok = [], True
        for M in (1, 2, 3):
            G, d = _dsum(lambda i: i)
            k = math.ceil(M) + 2
            ball = check_properness(d, k, 256, require_certificate=True).ball
            target = G.from_support([math.ceil(M) + 1])
            space = LsSpace(ball, d.dist, "ball")
            rep = is_m_connected(space, M)
            good = target in ball and not rep.connected and rep.gap >= M + 1
            ok &= good
            rows.append({"M": M, "ball_radius": k, "ball_size": len(ball), "connected": rep.connected,
                         "components": len(rep.components), "gap": rep.gap, "gap_witness": rep.gap_witness})
        return verdict(ok, {"rows": rows})

    return Scenario(
        "connectivity:z-dsum2",
        "metric connectedness vs finite generation on Z and on the Z_2 direct sum",
        {"horizon": 101},
        [
            Check("z-round-trip", "metric connectedness <-> finite generation, F = B(1, M+1)", z_line),
            Check("dsum2-disconnected", "metric connectedness <-> finite generation (contrapositive)", dsum),
        ],
    )


def _uniformity() -> Scenario:
    def maps(p):
        n = p["horizon"]
        Z = FreeAbelian(1)
        zl = l1_metric(Z)
        G, d1 = _dsum(lambda i: i)
        d2 = weighted_norm_metric(G, lambda i: 2**i)
        S, chain = symmetric_chain(4)
        cases = [
            ("identity dsum2 (w=i -> w=2^i)", lambda g: g, d1, d2, 64, True),
            ("n -> 2n on Z", lambda g: (2 * g[0],), zl, zl, n, True),
            ("n -> n^2 on Z", lambda g: (g[0] ** 2,), zl, zl, n, False),
        ]
        rows, ok = [], True
        for label, f, dG, dH, h, expect in cases:
            rep = equivalence_agreement(f, dG, dH, h, [1, 2, 3])
            good = rep.agree and rep.metric_ok == expect
            ok &= good
            rows.append({"map": label, "expected_uniform": expect, **_agreement_payload(rep)})
        return verdict(ok, {"maps": rows})

    return Scenario(
        "uniformity:maps",
        "metric ls-uniformity vs the F->E criterion on two uniform maps and n -> n^2",
        {"horizon": 61},
        [Check("criteria-agree", "ls-uniformity: F->E criterion", maps)],
    )


def _axioms() -> Scenario:
    def suites(p):
        spaces = {
            "Z[-30,30]": integer_line(-30, 30),
            "E2 lattice": translation_plane().action.space.sample([tuple(map(Fraction, q)) for q in lattice_points(2, 4)]),
            "M0 supports <= 5": TriadicSpace(0).sample(cap=6),
            "M0(-2) supports <= 3": TriadicSpace(-2).sample(cap=4),
        }
        G, d = _dsum(lambda i: i)
        spaces["(+)Z_2 w=i"] = G.as_space(d, 32)
        Z2 = FreeAbelian(2)
        spaces["Z^2 word"] = Z2.as_space(word_metric(Z2, Z2.unit_generators(), 12), 41)
        rows, ok = {}, True
        for name, sp in spaces.items():
            pm = check_pseudo_metric(sp)
            ls = check_ls_condition(sp)
            ok &= pm.ok and ls.ok and ls.max_class_size == 1
            rows[name] = {"pseudo_metric": pm.ok, "triples": pm.checked, "ls_condition": ls.ok, "max_zero_class": ls.max_class_size}
        return verdict(ok, {"spaces": rows})

    def planted(p):
        asym = LsSpace(list(range(10)), lambda a, b: Fraction(a - b), "signed difference")
        pm = check_pseudo_metric(asym)
        pts = [q for q in lattice_points(2, 13)][:100]
        flat = LsSpace(pts, lambda a, b: Fraction(abs(a[0] - b[0])), "|a-c| on Z^2")
        ls = check_ls_condition(flat)
        origin_class = ls.class_sizes[0]
        ok = (not pm.ok) and pm.failure == "symmetry" and not ls.ok and origin_class >= 10
        return verdict(ok, {
            "asymmetric": {"detected": not pm.ok, "failure": pm.failure, "witness": pm.witness},
            "infinite_zero_class": {"detected": not ls.ok, "origin_class_size": origin_class, "growing_points": len(ls.growing)},
        })

    return Scenario(
        "axioms",
        "pseudo-metric and ls-condition suites on built-in spaces, plus two planted counterexamples",
        {},
        [
            Check("axiom-suites", "large-scale metric: finite zero-classes", suites),
            Check("planted-counterexamples", "large-scale metric: finite zero-classes", planted),
        ],
    )


def _m0_z2() -> Scenario:
    def run(p):
        c = verify_m0_z2_equivalence(p["support_cap"], max_cap=PARAM_CAPS["support_cap"])
        return verdict(c.ok, {
            "N": c.N,
            "points": 2**c.N,
            "bijective": c.bijective,
            "max_change_by_k": c.max_change,
            "max_change_expected": [3 ** (k + 1) - 1 for k in range(c.N)],
            "max_witness": c.max_witness,
            "min_change_by_i": c.min_change,
            "min_change_expected": [3**i + 1 for i in range(c.N)],
            "min_witness": c.min_witness,
            "tight": c.tight,
            "isometry_witness": c.isometry_witness,
            "notes": c.notes,
            "certificate": _cert_payload(c.certificate),
        })

    return Scenario(
        "m0-z2",
        "ternary space A vs the Z_2 direct sum via the flip correspondence",
        {"support_cap": 9},
        [Check("flip-certificate", "M0 is coarsely equivalent to the Z_2 direct sum", run)],
    )


def _a_vs_m0() -> Scenario:
    def run(p):
        rep = a_hausdorff_bound(-3, p["support_cap"])
        ok = rep.all_within and rep.attained and rep.bound == Fraction(26, 27)
        return verdict(ok, {"min_idx": -3, "bound": rep.bound, "max_distance": rep.max_distance,
                            "witness": rep.witness, "points": rep.points, "attained": rep.attained})

    return Scenario(
        "a-vs-m0",
        "every point of M0(-3) lies within 26/27 of its truncation in A",
        {"support_cap": 9},
        [Check("bounded-distance", "M0 within bounded distance of A", run)],
    )


def _decompose(name: str, make_chain: Callable, kmax: int, description: str) -> Scenario:
    def run(p):
        _, chain = make_chain(p["kmax"])
        c = verify_decomposition_equivalence(chain, p["kmax"])
        return verdict(c.ok, {
            "n": c.n, "size": c.size, "bijective": c.bijective, "identity_zero": c.identity_zero,
            "filtration": c.filtration, "structural": c.structural, "ordered_pairs": c.ordered_pairs,
            "forward_E_supported": c.forward_supported, "backward_E_contained": c.backward_contained,
            "forward_E_sizes": [len(r.E) for r in c.forward], "backward_E_sizes": [len(r.E) for r in c.backward],
            "failures": c.failures,
        })

    return Scenario(
        name, description, {"kmax": kmax},
        [Check("decomposition", "locally finite G coarsely equivalent to sum of Z_{n_i}, n_i = |G_i/G_{i-1}|", run)],
    )


def _builtins() -> dict[str, Scenario]:
    items = [
        Scenario("svarc-milnor:z2-plane", "Z^2 acting by translations on the Euclidean plane",
                 {"horizon": 221, "radius": 1, "tolerance": 1e-9, "qi_radius": 10},
                 _action_checks(translation_plane, qi=True)),
        Scenario("svarc-milnor:z-line", "Z acting by translations on the line, basepoint 1/2",
                 {"horizon": 101, "radius": Fraction(2, 5), "tolerance": 1e-9, "qi_radius": 30},
                 _action_checks(translation_line, qi=True)),
        _orbit_scenario("trivial-action", "Z acting trivially on the line: infinite stabilizer"),
        _orbit_scenario("dense-orbit", "Z^2 on the line by x + m + n*alpha: accumulating orbit"),
        _orbit_scenario("reflect-line", "Z_2 acting on the line by reflection"),
        _orbit_scenario("flip-m0", "flip action of the Z_2 direct sum on A"),
        _two_metrics(),
        _connectivity(),
        _uniformity(),
        _axioms(),
        _m0_z2(),
        _a_vs_m0(),
        _decompose("decompose:symchain", lambda k: symmetric_chain(k), 5, "S_1 < S_2 < ... < S_5 normal form"),
        _decompose("decompose:cyclic-tower", lambda k: cyclic_tower(k), 3, "Z_2 < Z_4 < Z_8 normal form"),
    ]
    return {s.name: s for s in items}


def list_scenarios() -> list[tuple[str, str]]:
    return [(s.name, s.description) for s in _builtins().values()]


def get_scenario(name: str) -> Scenario:
    scenarios = _builtins()
    if name not in scenarios:
        raise InvalidScenario("scenario", f"unknown scenario {name!r}")
    return scenarios[name]


def scenario_from_mapping(data: dict) -> Scenario:
    """Build from ``{"scenario": name, "params": {...}, "checks": [...]}``."""
    if not isinstance(data, dict):
        raise InvalidScenario("scenario", "expected a mapping")
    for key in data:
        if key not in ("scenario", "params", "checks"):
            raise InvalidScenario(key, "unknown field")
    if "scenario" not in data:
        raise InvalidScenario("scenario", "missing")
    base = get_scenario(data["scenario"])
    params = data.get("params") or {}
    if not isinstance(params, dict):
        raise InvalidScenario("params", "expected a mapping")
    checks = data.get("checks")
    if checks is not None and not isinstance(checks, list):
        raise InvalidScenario("checks", "expected a list")
    return base.with_overrides(params, checks)


def _run_check(check: Check, params: dict) -> dict:
    try:
        res = check.run(params)
    except Exception as exc:  # a crashing check is a failed check, never a skipped one
        res = CheckResult("fail", {}, f"{type(exc).__name__}: {exc}")
    record = {"name": check.name, "anchor": check.anchor, "verdict": res.verdict, "payload": jsonable(res.payload)}
    if res.reason:
        record["reason"] = res.reason
    return record


def run(scenario: Scenario, parallel: bool = False) -> dict:
    """Execute the checks in declared order and assemble the report."""
    if parallel and len(scenario.checks) > 1:
        with ThreadPoolExecutor() as pool:
            records = list(pool.map(lambda c: _run_check(c, scenario.params), scenario.checks))
    else:
        records = [_run_check(c, scenario.params) for c in scenario.checks]
    counts = {v: sum(1 for r in records if r["verdict"] == v) for v in ("pass", "fail", "not-applicable")}
    return {
        "tool": "coarsegeom",
        "version": __version__,
        "scenario": {
            "name": scenario.name,
            "description": scenario.description,
            "params": jsonable(scenario.params),
            "checks": [c.name for c in scenario.checks],
        },
        "horizon_statement": HORIZON_STATEMENT,
        "checks": records,
        "summary": counts,
    }


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def exit_status(report: dict) -> int:
    return 1 if report["summary"]["fail"] else 0
