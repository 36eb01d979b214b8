"""The ternary Cantor-like space M0, its subspace A, the flip action of the
direct sum of Z_2's, and normal forms for locally finite groups."""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable

from .actions import ActionScenario, IsometricAction, ModelSpace
from .coarse import CoarseCertificate, UniformityReport, coarse_equivalence_certificate, group_ls_uniform_check
from .core_metrics import LsSpace
from .groups import (
    DirectSum,
    FiniteSubgroupChain,
    NotAChain,
    SubgroupView,
    weighted_norm_metric,
)

DEFAULT_SUPPORT_CAP = 9


class DomainMismatch(ValueError):
    pass


class CapExceeded(ValueError):
    pass


# ---------------------------------------------------------------------------
# M0 and A


@dataclass(frozen=True, order=True)
class TriadicPoint:
    """sum of 2 * 3**i over ``support``; all indices are >= ``min_idx``."""

    support: tuple[int, ...] = ()
    min_idx: int = 0

    def __post_init__(self):
        s = tuple(sorted(set(self.support)))
        if s and s[0] < self.min_idx:
            raise DomainMismatch(f"index {s[0]} below min_idx {self.min_idx}")
        object.__setattr__(self, "support", s)

    @functools.cached_property
    def value(self) -> int | Fraction:
        """Exact; an int whenever ``min_idx >= 0``."""
        if self.min_idx >= 0:
            return sum(2 * 3**i for i in self.support)
        return sum((2 * Fraction(3) ** i for i in self.support), Fraction(0))

    @classmethod
    def from_value(cls, v, min_idx: int = 0) -> "TriadicPoint":
        """Greedy top-down digit extraction; the inverse of ``value``."""
        v = Fraction(v)
        rest, support = v, []
        while rest > 0:
            i = min_idx
            while 2 * Fraction(3) ** (i + 1) <= rest:
                i += 1
            if 2 * Fraction(3) ** i > rest or (support and i >= support[-1]):
                raise ValueError(f"{v} is not in M0 with min_idx {min_idx}")
            support.append(i)
            rest -= 2 * Fraction(3) ** i
        return cls(tuple(support), min_idx)

    def truncate(self) -> "TriadicPoint":
        """Drop negative indices: the nearby point of A."""
        return TriadicPoint(tuple(i for i in self.support if i >= 0), 0)


def m0_distance(x: TriadicPoint, y: TriadicPoint) -> Fraction:
    """|v(x) - v(y)|."""
    if x.min_idx != y.min_idx:
        raise DomainMismatch("points from different M0 truncations")
    return abs(x.value - y.value)


class TriadicSpace(ModelSpace):
    """M0 with digits at indices >= ``min_idx``; ``min_idx = 0`` gives A."""

    def __init__(self, min_idx: int = 0):
        self.min_idx = min_idx
        self.name = "A" if min_idx == 0 else f"M0({min_idx})"

    def point(self, support: Iterable[int] = ()):
        return TriadicPoint(tuple(support), self.min_idx)

    def dist(self, x, y):
        return abs(x.value - y.value)

    def points(self, cap: int) -> list[TriadicPoint]:
        """All points with support in ``min_idx .. cap-1``, by increasing value."""
        idx = list(range(self.min_idx, cap))
        return [self.point(itertools.compress(idx, bits)) for bits in _binary_counting(len(idx))]

    def sample(self, points=None, cap: int = DEFAULT_SUPPORT_CAP) -> LsSpace:
        return LsSpace(self.points(cap) if points is None else list(points), self.dist, self.name)

    def ball_points(self, x0, r):
        top = x0.value + Fraction(r)
        cap = self.min_idx
        while 2 * Fraction(3) ** cap < top:
            cap += 1
        return [p for p in self.points(cap) if abs(p.value - x0.value) < r]


def _binary_counting(n):
    for mask in range(2**n):
        yield [(mask >> k) & 1 for k in range(n)]


def flip_weight(i: int) -> int:
    """3**(i+1) - 1, the largest value change from digits 0..i."""
    return 3 ** (i + 1) - 1


def flip_group(n: int | None = None) -> DirectSum:
    """The direct sum of Z_2 over indices 0.. (n of them, or infinitely many)."""
    return DirectSum(2 if n is None else [2] * n, offset=0, weights=flip_weight)


def flip_action(g, x: TriadicPoint) -> TriadicPoint:
    """Toggle the digits of x at the indices in the support of g."""
    if x.min_idx != 0:
        raise DomainMismatch("the flip action lives on A (min_idx 0)")
    return TriadicPoint(tuple(set(x.support) ^ set(DirectSum.support(g))), 0)


def flip_scenario() -> ActionScenario:
    space = TriadicSpace(0)
    action = IsometricAction(
        flip_group(),
        space,
        flip_action,
        "flip-m0",
        isometric=False,
        free=True,
        notes=["the flip does not preserve |v(x) - v(y)|; coarse equivalence is certified directly"],
    )
    pts = [space.point(s) for s in [(), (0,), (1,), (0, 2)]]
    return ActionScenario("flip-m0", action, space.point(), 64, Fraction(10), pts)


@dataclass
class HausdorffReport:
    bound: Fraction
    max_distance: Fraction
    witness: TriadicPoint | None
    points: int
    all_within: bool

    @property
    def attained(self) -> bool:
        return self.max_distance == self.bound


def a_hausdorff_bound(min_idx: int, cap: int = DEFAULT_SUPPORT_CAP) -> HausdorffReport:
    """sum of 2 * 3**i for i in min_idx..-1, checked against every point of
    M0(min_idx) with support below ``cap`` and its truncation to A."""
    if min_idx >= 0:
        raise ValueError("min_idx must be negative")
    bound = sum((2 * Fraction(3) ** i for i in range(min_idx, 0)), Fraction(0))
    pts = TriadicSpace(min_idx).points(cap)
    best, witness = Fraction(0), None
    for p in pts:
        d = abs(p.value - p.truncate().value)
        if d > best:
            best, witness = d, p
    return HausdorffReport(bound, best, witness, len(pts), best <= bound)


@dataclass
class M0Z2Certificate:
    N: int
    certificate: CoarseCertificate
    bijective: bool
    max_change: list[Fraction]
    max_witness: list[tuple]
    min_change: list[Fraction]
    min_witness: list[tuple]
    isometry_witness: tuple | None
    notes: list[str] = field(default_factory=list)

    @property
    def tight(self) -> bool:
        return all(v == 3 ** (k + 1) - 1 for k, v in enumerate(self.max_change)) and all(
            v == 3**i + 1 for i, v in enumerate(self.min_change)
        )

    @property
    def ok(self) -> bool:
        return self.bijective and self.tight and self.certificate.ok


def verify_m0_z2_equivalence(N: int = DEFAULT_SUPPORT_CAP, max_cap: int = DEFAULT_SUPPORT_CAP) -> M0Z2Certificate:
    """Certify g -> g.(empty) between the Z_2 direct sum on 0..N-1 with weights
    3**(i+1) - 1 and A restricted to supports in 0..N-1."""
    if N > max_cap:
        raise CapExceeded(f"N={N} above cap {max_cap}")
    G = flip_group(N)
    dG = weighted_norm_metric(G, flip_weight)
    A = TriadicSpace(0)
    empty = A.point()
    f = lambda g: flip_action(g, empty)
    back = lambda x: G.from_support(x.support)
    X = G.as_space(dG, G.order)
    Y = A.sample(cap=N)
    images = [f(g) for g in X.points]
    bijective = len(set(images)) == len(Y.points) == len(X.points) and set(images) == set(Y.points)

    # exhaustive tightness over bitmask pairs
    vals = [sum(2 * 3**i for i in range(N) if mask >> i & 1) for mask in range(2**N)]
    top_max = [0] * N
    top_max_w: list[Any] = [None] * N
    top_min: list[Any] = [None] * N
    top_min_w: list[Any] = [None] * N
    for a, b in itertools.combinations(range(2**N), 2):
        t = (a ^ b).bit_length() - 1
        v = abs(vals[a] - vals[b])
        if v > top_max[t]:
            top_max[t], top_max_w[t] = v, (a, b)
        if top_min[t] is None or v < top_min[t]:
            top_min[t], top_min_w[t] = v, (a, b)
    max_change, max_w, best, wit = [], [], 0, None
    for t in range(N):
        if top_max[t] > best:
            best, wit = top_max[t], top_max_w[t]
        max_change.append(Fraction(best))
        max_w.append(wit)
    as_pts = lambda pair: tuple(A.point(i for i in range(N) if m >> i & 1) for m in pair)

    cert = coarse_equivalence_certificate(f, back, X, Y)
    iso = IsometricAction(G, A, flip_action, isometric=False).verify_axioms(8, A.points(3))["isometry"]
    notes = []
    if not iso.ok:
        notes.append("flip action is not an isometry of A; certificate checks control tables directly")
    return M0Z2Certificate(
        N=N,
        certificate=cert,
        bijective=bijective,
        max_change=max_change,
        max_witness=[as_pts(w) for w in max_w],
        min_change=[Fraction(v) for v in top_min],
        min_witness=[as_pts(w) for w in top_min_w],
        isometry_witness=iso.witness,
        notes=notes,
    )


# ---------------------------------------------------------------------------
# locally finite groups


@dataclass
class DecompositionMap:
    """Normal form g = t_k t_{k-1} ... t_1 with t_i from a left transversal of
    G_{i-1} in G_i; ``phi(g)`` lists the transversal indices (coordinate i at
    position i-1)."""

    chain: FiniteSubgroupChain
    n: list[int]
    transversals: list[list]
    _coset: list[dict] = field(repr=False, default_factory=list)
    _inverse: dict = field(repr=False, default_factory=dict)

    @property
    def target(self) -> DirectSum:
        return DirectSum(self.n, offset=1)

    def coords(self, g) -> tuple[int, ...]:
        G = self.chain[-1]
        out = [0] * len(self.n)
        for i in range(len(self.n), 0, -1):
            j = self._coset[i - 1][g]
            out[i - 1] = j
            g = G.mul(G.inv(self.transversals[i - 1][j]), g)
        if g != G.identity:
            raise NotAChain("factorization did not terminate at the identity")
        return tuple(out)

    def phi(self, g):
        return self.target.from_coords(self.coords(g))

    def psi(self, t):
        """Inverse of phi on the last chain member."""
        return self._inverse[t]


def locally_finite_decomposition(chain: FiniteSubgroupChain) -> DecompositionMap:
    chain.verify()
    n, transversals, coset_maps = [], [], []
    prev = None
    for sub in chain.groups:
        els = sub.elements()
        if prev is None:
            n.append(sub.order)
            reps = list(els)
            coset = {g: k for k, g in enumerate(reps)}
        else:
            if sub.order % prev.order:
                raise NotAChain("index is not an integer")
            n.append(sub.order // prev.order)
            reps, coset = [], {}
            lower = prev.elements()
            for g in els:  # enumeration order: identity first, then by least member index
                if g in coset:
                    continue
                k = len(reps)
                reps.append(g)
                for h in lower:
                    coset[sub.mul(g, h)] = k
        transversals.append(reps)
        coset_maps.append(coset)
        prev = sub
    dm = DecompositionMap(chain, n, transversals, coset_maps)
    dm._inverse = {dm.phi(g): g for g in chain[-1].elements()}
    return dm


@dataclass
class DecompositionCertificate:
    n: list[int]
    k_max: int
    size: int
    bijective: bool
    identity_zero: bool
    filtration: bool
    structural: bool
    ordered_pairs: int
    forward: list[UniformityReport]
    backward: list[UniformityReport]
    forward_supported: list[bool]
    backward_contained: list[bool]
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return (
            self.bijective
            and self.identity_zero
            and self.filtration
            and self.structural
            and all(r.ok for r in self.forward + self.backward)
            and all(self.forward_supported)
            and all(self.backward_contained)
        )


def verify_decomposition_equivalence(chain: FiniteSubgroupChain, k_max: int | None = None) -> DecompositionCertificate:
    """Exhaustive check on G_{k_max} that phi is a bijection respecting the
    filtration, that x^-1 y in G_k iff phi(x), phi(y) agree above k, and the
    finite-set uniformity criterion in both directions for every level k."""
    k_max = len(chain) if k_max is None else k_max
    sub = FiniteSubgroupChain(chain.groups[:k_max], chain.ambient)
    dm = locally_finite_decomposition(sub)
    G = sub[-1]
    H = dm.target
    els = G.elements()
    phi = {g: dm.coords(g) for g in els}
    images = set(phi.values())
    bijective = len(images) == len(els) == math.prod(dm.n)
    identity_zero = not any(phi[G.identity])
    levels = [None] + sub.groups  # levels[k] = G_k, G_0 trivial
    in_level = lambda g, k: g == G.identity if k == 0 else g in levels[k]
    above = lambda c, k: c[k:]

    failures = []
    filtration = True
    for g in els:
        for k in range(k_max + 1):
            if in_level(g, k) != (not any(above(phi[g], k))):
                filtration = False
                failures.append(("filtration", g, k))
    structural, pairs = True, 0
    for x, y in itertools.permutations(els, 2):
        pairs += 1
        q = G.mul(G.inv(x), y)
        for k in range(k_max + 1):
            if in_level(q, k) != (above(phi[x], k) == above(phi[y], k)):
                structural = False
                failures.append(("structural", x, y, k))

    Hs = SubgroupView(H, [dm.phi(g) for g in els], "image")
    fwd, bwd, fwd_sup, bwd_in = [], [], [], []
    for k in range(k_max + 1):
        F = [g for g in els if in_level(g, k)]
        rep = group_ls_uniform_check(dm.phi, G, Hs, F, len(els))
        fwd.append(rep)
        fwd_sup.append(all(max(DirectSum.support(e), default=0) <= k for e in rep.E))
        Fp = [t for t in Hs.elements() if max(DirectSum.support(t), default=0) <= k]
        rep = group_ls_uniform_check(dm.psi, Hs, G, Fp, len(els))
        bwd.append(rep)
        bwd_in.append(all(in_level(e, k) for e in rep.E))
    return DecompositionCertificate(
        dm.n, k_max, len(els), bijective, identity_zero, filtration, structural, pairs,
        fwd, bwd, fwd_sup, bwd_in, failures[:10],
    )
