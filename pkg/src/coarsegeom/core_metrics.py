"""Exact distances, sampled ls-metric spaces and their axiom checks.

Every check works on a finite materialized sample of a (usually infinite)
space and reports a verdict that is only claimed up to that sample.
"""

from __future__ import annotations

import functools
import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Any, Callable, Sequence

from networkx.utils import UnionFind


class HorizonExceeded(ValueError):
    """Raised when a check asks for more points than the sample holds."""


# ---------------------------------------------------------------------------
# exact values


@functools.total_ordering
class Root:
    """The nonnegative square root of a rational that is not a perfect square.

    Only ordering against other nonnegative exact values is supported, which
    is all the axiom checks need.  Use :func:`exact_sqrt` to construct.
    """

    __slots__ = ("sq",)

    def __init__(self, sq):
        sq = Fraction(sq)
        if sq < 0:
            raise ValueError("negative radicand")
        self.sq = sq

    def __float__(self):
        return math.sqrt(self.sq.numerator) / math.sqrt(self.sq.denominator)

    def __eq__(self, other):
        if isinstance(other, Root):
            return self.sq == other.sq
        if isinstance(other, (int, Rational)):
            return other >= 0 and self.sq == Fraction(other) ** 2
        return NotImplemented

    def __lt__(self, other):
        if isinstance(other, Root):
            return self.sq < other.sq
        if isinstance(other, (int, Rational)):
            return other > 0 and self.sq < Fraction(other) ** 2
        return NotImplemented

    def __hash__(self):
        return hash(("sqrt", self.sq))

    def __repr__(self):
        return f"Root({self.sq})"

    def __str__(self):
        return f"sqrt({self.sq})"


def exact_sqrt(q) -> Fraction | Root:
    """Square root of a nonnegative rational, as a Fraction when it is one."""
    q = Fraction(q)
    if q < 0:
        raise ValueError("negative radicand")
    n, d = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if n * n == q.numerator and d * d == q.denominator:
        return Fraction(n, d)
    return Root(q)


def square(x) -> Fraction:
    """Exact square of a nonnegative distance value."""
    if isinstance(x, Root):
        return x.sq
    x = Fraction(x)
    return x * x


def triangle_holds(a, b, c) -> bool:
    """Exact test of ``c <= a + b`` for nonnegative values possibly given as roots."""
    if not any(isinstance(v, Root) for v in (a, b, c)):
        return Fraction(c) <= Fraction(a) + Fraction(b)
    a2, b2, c2 = square(a), square(b), square(c)
    lhs = c2 - a2 - b2
    return lhs <= 0 or lhs * lhs <= 4 * a2 * b2


def scaled(x, q) -> Fraction | Root:
    """``q * x`` exactly, for rational ``q >= 0``."""
    q = Fraction(q)
    if isinstance(x, Root):
        return exact_sqrt(x.sq * q * q)
    return Fraction(x) * q


def to_text(x) -> str:
    """Serialize an exact value: integers as decimals, rationals as p/q."""
    if isinstance(x, Root):
        return str(x)
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, int):
        return str(x)
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, float):
        return repr(x)
    return str(x)


# ---------------------------------------------------------------------------
# spaces


class LsSpace:
    """A materialized sample of a pseudo-metric space.

    ``points`` is the enumeration (first point first) and ``dist`` an exact
    distance oracle returning a Fraction, int or :class:`Root`.
    """

    def __init__(self, points: Sequence, dist: Callable[[Any, Any], Any], name: str = ""):
        self.points = tuple(points)
        self._dist = dist
        self.name = name

    @property
    def horizon(self) -> int:
        return len(self.points)

    def dist(self, p, q):
        return self._dist(p, q)

    def enumerate(self, n: int) -> tuple:
        if n > self.horizon:
            raise HorizonExceeded(f"{self.name or 'space'}: asked for {n} points, {self.horizon} materialized")
        return self.points[:n]

    def restrict(self, n: int) -> "LsSpace":
        return LsSpace(self.enumerate(n), self._dist, self.name)

    def __repr__(self):
        return f"LsSpace({self.name!r}, horizon={self.horizon})"


@dataclass
class Chain:
    points: tuple
    step_bound: Fraction

    def __len__(self):
        return len(self.points)


@dataclass
class AxiomReport:
    ok: bool
    checked: int
    failure: str | None = None
    witness: tuple | None = None


@dataclass
class LsConditionReport:
    ok: bool
    class_sizes: list[int]
    max_class_size: int
    horizon: int
    growing: list = field(default_factory=list)
    status: str = "verified up to horizon"


@dataclass
class ConnectivityReport:
    connected: bool
    M: Fraction
    components: list[list]
    horizon: int
    gap: Any = None
    gap_witness: tuple | None = None


def check_pseudo_metric(space: LsSpace, n: int | None = None) -> AxiomReport:
    """Exhaustively test zero self-distance, symmetry and the triangle inequality."""
    pts = space.enumerate(space.horizon if n is None else n)
    d = {}
    for i, p in enumerate(pts):
        if space.dist(p, p) != 0:
            return AxiomReport(False, i, "zero self-distance", (p,))
    for i, j in itertools.product(range(len(pts)), repeat=2):
        d[i, j] = space.dist(pts[i], pts[j])
    for i, j in itertools.combinations(range(len(pts)), 2):
        if d[i, j] != d[j, i]:
            return AxiomReport(False, len(d), "symmetry", (pts[i], pts[j]))
    for (i, j), v in d.items():
        if v < 0:
            return AxiomReport(False, len(d), "nonnegativity", (pts[i], pts[j]))
    m, rooted = _integer_matrix(d, len(pts))
    count = 0
    for i in range(len(pts)):
        row_i = m[i]
        for j in range(len(pts)):
            a, row_j = row_i[j], m[j]
            for k in range(len(pts)):
                count += 1
                b, c = row_j[k], row_i[k]
                if rooted:
                    # a, b, c are squares: c <= a + b iff c - a - b <= 0 or (c - a - b)^2 <= 4ab
                    lhs = c - a - b
                    ok = lhs <= 0 or lhs * lhs <= 4 * a * b
                else:
                    ok = c <= a + b
                if not ok:
                    return AxiomReport(False, count, "triangle", (pts[i], pts[j], pts[k]))
    return AxiomReport(True, count)


def _integer_matrix(d: dict, n: int) -> tuple[list[list[int]], bool]:
    """Distances (or their squares, when any is a root) over a common
    denominator, as a matrix of ints; the triangle test is scale-free."""
    rooted = any(isinstance(v, Root) for v in d.values())
    vals = {key: square(v) if rooted else Fraction(v) for key, v in d.items()}
    den = math.lcm(*(v.denominator for v in vals.values())) if vals else 1
    return [[vals[i, j].numerator * (den // vals[i, j].denominator) for j in range(n)] for i in range(n)], rooted


def _zero_classes(space: LsSpace, pts) -> list[int]:
    return [sum(1 for q in pts if space.dist(p, q) == 0) for p in pts]


def check_ls_condition(space: LsSpace, n: int | None = None) -> LsConditionReport:
    """Count, for each sampled point, the sampled points at distance exactly 0.

    The class sizes of the first ``n // 2`` points are recomputed on the half
    sample; any class that grows between the two is flagged, since an
    ls-metric needs every zero-class to be finite.
    """
    n = space.horizon if n is None else n
    pts = space.enumerate(n)
    sizes = _zero_classes(space, pts)
    half = pts[: n // 2]
    half_sizes = _zero_classes(space, half)
    growing = [half[i] for i in range(len(half)) if sizes[i] > half_sizes[i]]
    return LsConditionReport(
        ok=not growing,
        class_sizes=sizes,
        max_class_size=max(sizes, default=0),
        horizon=n,
        growing=growing,
        status="verified up to horizon" if not growing else "zero-class grows with horizon",
    )


def _components(space: LsSpace, pts, M) -> list[list[int]]:
    uf = UnionFind(range(len(pts)))
    for i, j in itertools.combinations(range(len(pts)), 2):
        if space.dist(pts[i], pts[j]) <= M:
            uf.union(i, j)
    groups: dict[int, list[int]] = {}
    for i in range(len(pts)):
        groups.setdefault(uf[i], []).append(i)
    return sorted(groups.values(), key=lambda c: c[0])


def is_m_connected(space: LsSpace, M, n: int | None = None) -> ConnectivityReport:
    """Components of the sample under the relation ``dist <= M``.

    When disconnected, ``gap`` is the least distance between points lying in
    different components, with a witness pair.
    """
    M = Fraction(M)
    if M <= 0:
        raise ValueError("M must be positive")
    n = space.horizon if n is None else n
    pts = space.enumerate(n)
    comps = _components(space, pts, M)
    gap = witness = None
    if len(comps) > 1:
        label = {i: c for c, members in enumerate(comps) for i in members}
        for i, j in itertools.combinations(range(len(pts)), 2):
            if label[i] != label[j]:
                v = space.dist(pts[i], pts[j])
                if gap is None or v < gap:
                    gap, witness = v, (pts[i], pts[j])
    return ConnectivityReport(
        connected=len(comps) == 1,
        M=M,
        components=[[pts[i] for i in c] for c in comps],
        horizon=n,
        gap=gap,
        gap_witness=witness,
    )


def connectivity_threshold(space: LsSpace, n: int | None = None):
    """Least sampled distance M at which the sample is M-connected."""
    n = space.horizon if n is None else n
    pts = space.enumerate(n)
    if len(pts) < 2:
        return Fraction(0)
    # the bottleneck edge of a minimum spanning tree
    edges = sorted(
        (space.dist(pts[i], pts[j]), i, j) for i, j in itertools.combinations(range(len(pts)), 2)
    )
    uf = UnionFind(range(len(pts)))
    merged = 0
    for v, i, j in edges:
        if uf[i] != uf[j]:
            uf.union(i, j)
            merged += 1
            if merged == len(pts) - 1:
                return v
    raise AssertionError("unreachable")


def find_chain(space: LsSpace, a, b, M) -> Chain | None:
    """Shortest (fewest-steps) M-chain from ``a`` to ``b`` through sampled points."""
    M = Fraction(M)
    pts = space.points
    if a not in pts or b not in pts:
        raise HorizonExceeded("endpoints must be enumerated points")
    prev = {a: None}
    queue = deque([a])
    while queue:
        p = queue.popleft()
        if p == b:
            path = []
            while p is not None:
                path.append(p)
                p = prev[p]
            return Chain(tuple(reversed(path)), M)
        for q in pts:
            if q not in prev and space.dist(p, q) <= M:
                prev[q] = p
                queue.append(q)
    return None


# ---------------------------------------------------------------------------
# stock spaces


def integer_line(lo: int, hi: int) -> LsSpace:
    """The integers ``lo..hi`` with ``|m - n|``, enumerated outward from 0."""
    pts = sorted(range(lo, hi + 1), key=lambda m: (abs(m), m))
    return LsSpace(pts, lambda m, n: Fraction(abs(m - n)), f"Z[{lo},{hi}]")


def lattice_points(dim: int, radius: int) -> list[tuple[int, ...]]:
    """Points of Z^dim with l1-norm <= radius, by l1-shell then lexicographic."""
    pts = [p for p in itertools.product(range(-radius, radius + 1), repeat=dim) if sum(map(abs, p)) <= radius]
    return sorted(pts, key=lambda p: (sum(map(abs, p)), p))
