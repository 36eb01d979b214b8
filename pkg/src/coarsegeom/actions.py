"""Group actions on model spaces and the metric they induce on the group."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable, Sequence

from .core_metrics import AxiomReport, LsSpace, exact_sqrt, square
from .groups import (
    Cyclic,
    EnumGroup,
    FreeAbelian,
    GroupLsMetric,
    ProperReport,
    check_properness,
)


class NoIntersectionPredicate(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# model spaces


class ModelSpace:
    """An infinite metric space with an exact distance and a point constructor.

    ``geodesic`` spaces let two open r-balls meet iff their centres are
    closer than 2r.  Discrete spaces may instead list a ball exactly via
    ``ball_points``.
    """

    name = "space"
    geodesic = False

    def dist(self, x, y):
        raise NotImplementedError

    def point(self, *args):
        raise NotImplementedError

    def ball_points(self, x0, r) -> list | None:
        return None

    def sample(self, points: Iterable) -> LsSpace:
        return LsSpace(list(points), self.dist, self.name)


class Euclidean(ModelSpace):
    """R^n restricted to rational points; distances are exact square roots."""

    geodesic = True

    def __init__(self, n: int):
        self.n = n
        self.name = f"E{n}"

    def point(self, *coords):
        if len(coords) != self.n:
            raise ValueError(f"expected {self.n} coordinates")
        return tuple(Fraction(c) for c in coords)

    def dist(self, x, y):
        return exact_sqrt(sum((a - b) ** 2 for a, b in zip(x, y)))

    def grid(self, step, lo=0, hi=1) -> list[tuple]:
        step, lo, hi = Fraction(step), Fraction(lo), Fraction(hi)
        ticks = [lo + k * step for k in range(int((hi - lo) / step) + 1)]
        return [tuple(p) for p in itertools.product(ticks, repeat=self.n)]


class CayleyGraph(ModelSpace):
    """Vertices of a Cayley graph with the word metric."""

    def __init__(self, metric: GroupLsMetric):
        self.metric = metric
        self.name = f"Cay({metric.group.name})"

    def point(self, g):
        return g

    def dist(self, x, y):
        return self.metric.dist(x, y)

    def ball_points(self, x0, r):
        ball = self.metric.ball(r)
        if ball is None:
            return None
        return [self.metric.group.mul(x0, b) for b in ball]


# ---------------------------------------------------------------------------
# actions


@dataclass
class IsometricAction:
    """``act(g, x)``; ``isometric`` records whether distances are preserved
    and ``free`` whether no nontrivial element fixes any point."""

    group: EnumGroup
    space: ModelSpace
    act: Callable[[Any, Any], Any]
    name: str = ""
    isometric: bool = True
    free: bool = False
    notes: list[str] = field(default_factory=list)

    def orbit_map(self, x0):
        return lambda g: self.act(g, x0)

    def verify_axioms(self, n: int, points: Sequence) -> dict[str, AxiomReport]:
        """Identity, compatibility and isometry, exhaustively on the sample."""
        G = self.group
        els = G.enumerate(n)
        out = {}
        bad = next((x for x in points if self.act(G.identity, x) != x), None)
        out["identity"] = AxiomReport(bad is None, len(points), None if bad is None else "identity", None if bad is None else (bad,))
        count, witness = 0, None
        for g, h, x in itertools.product(els, els, points):
            count += 1
            if self.act(g, self.act(h, x)) != self.act(G.mul(g, h), x):
                witness = (g, h, x)
                break
        out["compatibility"] = AxiomReport(witness is None, count, None if witness is None else "compatibility", witness)
        count, witness = 0, None
        for g in els:
            for x, y in itertools.combinations(points, 2):
                count += 1
                if self.space.dist(self.act(g, x), self.act(g, y)) != self.space.dist(x, y):
                    witness = (g, x, y)
                    break
            if witness:
                break
        out["isometry"] = AxiomReport(witness is None, count, None if witness is None else "isometry", witness)
        return out


def induced_metric(action: IsometricAction, x0) -> GroupLsMetric:
    """d_G(g, h) = d_X(g.x0, h.x0)."""
    act, d = action.act, action.space.dist
    return GroupLsMetric(action.group, dist=lambda g, h: d(act(g, x0), act(h, x0)), name=f"induced[{action.name}]")


def _halves(group: EnumGroup, horizon: int):
    return group.enumerate(horizon // 2), group.enumerate(horizon)


@dataclass
class StabilizerReport:
    ok: bool
    status: str
    elements: list
    horizon: int


def stabilizer(action: IsometricAction, x0, horizon: int) -> StabilizerReport:
    G = action.group
    half, full = _halves(G, horizon)
    fixed = [g for g in full if action.act(g, x0) == x0]
    if G.is_finite_at(horizon):
        return StabilizerReport(True, "exact (finite group)", fixed, horizon)
    if action.free and fixed == [G.identity]:
        return StabilizerReport(True, "stabilized (free action)", fixed, horizon)
    half_fixed = [g for g in half if action.act(g, x0) == x0]
    if len(half_fixed) == len(fixed):
        return StabilizerReport(True, "stable up to horizon", fixed, horizon)
    return StabilizerReport(False, "grows with horizon", fixed, horizon)


def _orbit(action, x0, els):
    seen = {}
    for g in els:
        seen.setdefault(action.act(g, x0), g)
    return list(seen)


def _min_gap(space, pts):
    best = witness = None
    for p, q in itertools.combinations(pts, 2):
        v = space.dist(p, q)
        if v != 0 and (best is None or v < best):
            best, witness = v, (p, q)
    return best, witness


@dataclass
class OrbitReport:
    orbit: list
    min_gap: Any
    gap_witness: tuple | None
    count_within: int
    radius: Fraction
    horizon: int
    half_min_gap: Any = None
    half_count_within: int = 0
    exact: bool = False

    @property
    def single_point(self) -> bool:
        return len(self.orbit) == 1

    @property
    def gap_ok(self) -> bool:
        if self.single_point or self.exact:
            return True
        return self.half_min_gap is not None and self.min_gap == self.half_min_gap

    @property
    def count_ok(self) -> bool:
        return self.exact or self.count_within == self.half_count_within


def orbit_report(action: IsometricAction, x0, horizon: int, radius) -> OrbitReport:
    """Sampled orbit of x0, its least positive pairwise gap and the number of
    orbit points at distance < ``radius`` from x0, at ``horizon`` and at
    ``horizon // 2``."""
    radius = Fraction(radius)
    half, full = _halves(action.group, horizon)
    d = action.space.dist
    orb, horb = _orbit(action, x0, full), _orbit(action, x0, half)
    gap, wit = _min_gap(action.space, orb)
    hgap, _ = _min_gap(action.space, horb)
    return OrbitReport(
        orbit=orb,
        min_gap=gap,
        gap_witness=wit,
        count_within=sum(1 for p in orb if d(x0, p) < radius),
        radius=radius,
        horizon=horizon,
        half_min_gap=hgap,
        half_count_within=sum(1 for p in horb if d(x0, p) < radius),
        exact=action.group.is_finite_at(horizon),
    )


@dataclass
class CharReport:
    finite_stabilizer: bool
    discrete_orbit: bool
    bounded_discrete_finite: bool
    stabilizer: StabilizerReport
    orbit: OrbitReport
    properness: ProperReport

    @property
    def overall(self) -> bool:
        return self.finite_stabilizer and self.discrete_orbit and self.bounded_discrete_finite

    @property
    def agree(self) -> bool:
        return self.overall == self.properness.ok


def check_char_conditions(action: IsometricAction, x0, horizon: int, radius) -> CharReport:
    """The three orbit conditions next to properness of the induced metric at
    the same horizon and radius; the two verdicts are expected to agree."""
    stab = stabilizer(action, x0, horizon)
    orb = orbit_report(action, x0, horizon, radius)
    proper = check_properness(induced_metric(action, x0), radius, horizon)
    return CharReport(stab.ok, orb.gap_ok, orb.count_ok, stab, orb, proper)


@dataclass
class ProperActionReport:
    S: list
    r: Fraction
    horizon: int
    exact: bool
    predicate: str
    within_4r: bool
    max_norm: Any
    stabilized: bool
    status: str


def proper_action_check(action: IsometricAction, x0, r, horizon: int, exact: bool = True, u_sample: Sequence | None = None) -> ProperActionReport:
    """S = {g : g.U meets U} for the open ball U = B(x0, r), and the check
    that every such g has induced distance at most 4r from the identity."""
    r = Fraction(r)
    space, act = action.space, action.act
    if space.geodesic and action.isometric:
        two_r = 2 * r
        meets = lambda g: space.dist(x0, act(g, x0)) < two_r
        predicate, is_exact = "geodesic: d(x0, g.x0) < 2r", True
    elif (U := space.ball_points(x0, r)) is not None:
        meets = lambda g: any(space.dist(act(g, u), x0) < r for u in U)
        predicate, is_exact = "finite ball listing", True
    else:
        if exact:
            raise NoIntersectionPredicate(f"{space.name} offers only witness sampling")
        U = [u for u in (u_sample or []) if space.dist(u, x0) < r]
        meets = lambda g: any(space.dist(act(g, u), x0) < r for u in U)
        predicate, is_exact = f"witness sampling over {len(U)} points (one-sided)", False

    half, full = _halves(action.group, horizon)
    S = [g for g in full if meets(g)]
    metric = induced_metric(action, x0)
    norms = [metric.norm(g) for g in S]
    bound = 4 * r
    within = all(v <= bound for v in norms)
    if action.group.is_finite_at(horizon):
        stabilized, status = True, "exact (finite group)"
    else:
        stabilized = len([g for g in half if meets(g)]) == len(S)
        status = "stable up to horizon" if stabilized else "grows with horizon"
    return ProperActionReport(S, r, horizon, is_exact, predicate, within, max(norms, default=Fraction(0)), stabilized, status)


@dataclass
class CoverReport:
    radius: Any
    radius_sq: Fraction
    witness: Any
    sample_size: int
    horizon: int


def cocompactness_radius(action: IsometricAction, x0, space_sample: Sequence, horizon: int) -> CoverReport:
    """Largest distance from a sampled point to the sampled orbit of x0."""
    orb = _orbit(action, x0, action.group.enumerate(horizon))
    d = action.space.dist
    best, witness = None, None
    for x in space_sample:
        near = min(d(x, p) for p in orb)
        if best is None or near > best:
            best, witness = near, x
    return CoverReport(best, square(best), witness, len(space_sample), horizon)


# ---------------------------------------------------------------------------
# built-in actions


@dataclass
class ActionScenario:
    """An action with a basepoint and the sizes at which it is examined."""

    name: str
    action: IsometricAction
    x0: Any
    horizon: int
    radius: Fraction
    points: list = field(default_factory=list)
    expect_proper: bool = True
    expect_finite_stabilizer: bool = True


def translation_plane() -> ActionScenario:
    E = Euclidean(2)
    act = lambda g, x: (x[0] + g[0], x[1] + g[1])
    action = IsometricAction(FreeAbelian(2), E, act, "zn2-plane", free=True)
    pts = [E.point(a, b) for a, b in [(0, 0), (1, 0), (Fraction(1, 2), Fraction(1, 3)), (-2, 5)]]
    return ActionScenario("zn2-plane", action, E.point(0, 0), 221, Fraction(3), pts)


def translation_line(x0=Fraction(1, 2)) -> ActionScenario:
    E = Euclidean(1)
    action = IsometricAction(FreeAbelian(1), E, lambda g, x: (x[0] + g[0],), "z-line", free=True)
    pts = [E.point(c) for c in (0, Fraction(1, 2), 3, -7)]
    return ActionScenario("z-line", action, E.point(x0), 101, Fraction(3), pts)


def reflection_line() -> ActionScenario:
    E = Euclidean(1)
    action = IsometricAction(Cyclic(2), E, lambda g, x: (-x[0],) if g else x, "reflect-line")
    pts = [E.point(c) for c in (0, 1, Fraction(-5, 2))]
    return ActionScenario("reflect-line", action, E.point(0), 10, Fraction(3), pts)


def trivial_line() -> ActionScenario:
    E = Euclidean(1)
    action = IsometricAction(FreeAbelian(1), E, lambda g, x: x, "trivial-action")
    pts = [E.point(c) for c in (0, 2, -1)]
    return ActionScenario("trivial-action", action, E.point(0), 101, Fraction(1), pts, expect_proper=False, expect_finite_stabilizer=False)


def dense_orbit(alpha=Fraction(7050, 10000)) -> ActionScenario:
    """Z^2 on the line by (m, n).x = x + m + n*alpha.

    With irrational alpha the orbit is dense; the rational stand-in gives
    orbits whose bounded pieces keep filling in as the horizon grows.
    """
    E = Euclidean(1)
    alpha = Fraction(alpha)
    act = lambda g, x: (x[0] + g[0] + g[1] * alpha,)
    action = IsometricAction(FreeAbelian(2), E, act, "dense-orbit")
    pts = [E.point(c) for c in (0, 1, Fraction(1, 3))]
    return ActionScenario("dense-orbit", action, E.point(0), 221, Fraction(1), pts, expect_proper=False)


def builtin_actions() -> dict[str, ActionScenario]:
    from .zero_dim import flip_scenario

    out = {}
    for make in (translation_plane, translation_line, reflection_line, trivial_line, dense_orbit, flip_scenario):
        sc = make()
        out[sc.name] = sc
    return out
