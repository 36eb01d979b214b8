"""Enumerated countable groups and proper left-invariant ls-metrics on them."""

from __future__ import annotations

import heapq
import itertools
import math
import threading
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable, Iterator, Sequence

from .core_metrics import AxiomReport, HorizonExceeded, LsSpace


class InvalidParameter(ValueError):
    pass


class Unreachable(LookupError):
    """An element lies beyond the explored part of the Cayley graph.

    ``lower_bound`` is a valid lower bound for its norm.
    """

    def __init__(self, element, lower_bound):
        super().__init__(f"{element!r} not reached (norm >= {lower_bound})")
        self.element = element
        self.lower_bound = lower_bound


class BudgetExceeded(Unreachable):
    pass


class CannotCertify(RuntimeError):
    pass


class BallNotStabilized(RuntimeError):
    pass


class NotAChain(ValueError):
    pass


# ---------------------------------------------------------------------------
# groups


class EnumGroup:
    """A countable group with a fixed total enumeration starting at the identity.

    Subclasses provide ``identity``, ``mul``, ``inv`` and ``_generate``; ``order``
    is ``None`` for infinite groups.
    """

    name = "group"
    order: int | None = None
    identity: Any = None

    def __init__(self):
        self._cache: list = []
        self._source: Iterator | None = None
        self._lock = threading.Lock()

    def mul(self, g, h):
        raise NotImplementedError

    def inv(self, g):
        raise NotImplementedError

    def _generate(self) -> Iterator:
        raise NotImplementedError

    def enumerate(self, n: int) -> tuple:
        with self._lock:
            if self._source is None:
                self._source = self._generate()
            while len(self._cache) < n:
                try:
                    self._cache.append(next(self._source))
                except StopIteration:
                    break
            return tuple(self._cache[:n])

    def elements(self) -> tuple:
        if self.order is None:
            raise InvalidParameter(f"{self.name} is infinite")
        return self.enumerate(self.order)

    def is_finite_at(self, horizon: int) -> bool:
        return self.order is not None and horizon >= self.order

    def as_space(self, metric: "GroupLsMetric", n: int) -> LsSpace:
        return LsSpace(self.enumerate(n), metric.dist, f"{self.name}/{metric.name}")

    def __repr__(self):
        return f"<{type(self).__name__} {self.name}>"


class FreeAbelian(EnumGroup):
    """Z^n as integer tuples, enumerated by l1-shell then lexicographically."""

    def __init__(self, n: int):
        if n < 1:
            raise InvalidParameter("rank must be positive")
        super().__init__()
        self.rank = n
        self.name = f"Z^{n}"
        self.identity = (0,) * n

    def mul(self, g, h):
        return tuple(a + b for a, b in zip(g, h))

    def inv(self, g):
        return tuple(-a for a in g)

    def _generate(self):
        for k in itertools.count():
            yield from sorted(_l1_shell(self.rank, k))

    def unit_generators(self) -> list[tuple]:
        gens = []
        for i in range(self.rank):
            e = [0] * self.rank
            e[i] = 1
            gens += [tuple(e), self.inv(tuple(e))]
        return gens


def _l1_shell(rank, k):
    if rank == 1:
        return [(k,), (-k,)] if k else [(0,)]
    out = []
    for a in range(-k, k + 1):
        out += [(a,) + rest for rest in _l1_shell(rank - 1, k - abs(a))]
    return out


class Cyclic(EnumGroup):
    def __init__(self, m: int):
        if m < 1:
            raise InvalidParameter("cyclic order must be positive")
        super().__init__()
        self.m = self.order = m
        self.name = f"Z_{m}"
        self.identity = 0

    def mul(self, g, h):
        return (g + h) % self.m

    def inv(self, g):
        return -g % self.m

    def _generate(self):
        return iter(range(self.m))


class DirectSum(EnumGroup):
    """Direct sum of cyclic groups Z_{n_i} over indices ``offset, offset+1, ...``.

    Elements are sorted tuples of ``(index, value)`` pairs with nonzero value.
    ``orders`` is a finite sequence or a single int for the infinite sum of
    copies. Enumeration is by increasing ``sum(weights(i) for i in support)``,
    ties broken lexicographically; weights must be strictly increasing.
    """

    def __init__(self, orders: int | Sequence[int], offset: int = 0, weights: Callable[[int], Any] | None = None):
        super().__init__()
        if isinstance(orders, int):
            if orders < 2:
                raise InvalidParameter("factor orders must be >= 2")
            self.length = None
            self._orders = lambda i: orders
            self.name = f"(+)Z_{orders}"
            self.order = None
        else:
            orders = list(orders)
            if not orders or any(o < 1 for o in orders):
                raise InvalidParameter("factor orders must be positive")
            self.length = len(orders)
            self._orders = lambda i: orders[i - offset]
            self.name = "(+)".join(f"Z_{o}" for o in orders)
            self.order = math.prod(orders)
        self.offset = offset
        self.weights = weights or (lambda i: Fraction(i - offset + 1))
        self.identity = ()

    def indices(self) -> Iterable[int]:
        if self.length is None:
            return itertools.count(self.offset)
        return range(self.offset, self.offset + self.length)

    def order_at(self, i: int) -> int:
        return self._orders(i)

    def valid_index(self, i: int) -> bool:
        return i >= self.offset and (self.length is None or i < self.offset + self.length)

    def mul(self, g, h):
        out = dict(g)
        for i, v in h:
            out[i] = (out.get(i, 0) + v) % self._orders(i)
        return tuple(sorted((i, v) for i, v in out.items() if v))

    def inv(self, g):
        return tuple((i, -v % self._orders(i)) for i, v in g)

    @staticmethod
    def support(g) -> tuple[int, ...]:
        return tuple(i for i, _ in g)

    def from_support(self, support: Iterable[int]):
        """The element with value 1 on each listed index (the Z_2 case)."""
        return tuple((i, 1) for i in sorted(set(support)))

    def from_coords(self, coords: Sequence[int]):
        """Element from a coordinate tuple indexed from ``offset``."""
        return tuple((self.offset + k, v % self._orders(self.offset + k)) for k, v in enumerate(coords) if v % self._orders(self.offset + k))

    def _expand(self, support):
        ranges = [range(1, self._orders(i)) for i in support]
        return [tuple(zip(support, vals)) for vals in itertools.product(*ranges)]

    def _generate(self):
        yield ()
        first = self.offset
        if not self.valid_index(first):
            return
        heap = [(self.weights(first), (first,))]
        while heap:
            w, _ = heap[0]
            batch = []
            while heap and heap[0][0] == w:
                _, s = heapq.heappop(heap)
                batch += self._expand(s)
                j = s[-1]
                if self.valid_index(j + 1):
                    dj = self.weights(j + 1) - self.weights(j)
                    heapq.heappush(heap, (w + self.weights(j + 1), s + (j + 1,)))
                    heapq.heappush(heap, (w + dj, s[:-1] + (j + 1,)))
            yield from sorted(batch)


class Symmetric(EnumGroup):
    """S_k on {0..k-1}, one-line tuples, ``(g*h)(x) = g(h(x))``.

    Enumeration runs through S_1, then S_2 minus S_1, ... where S_i fixes
    the points ``i..k-1``; lexicographic within each layer.
    """

    def __init__(self, k: int):
        if k < 1:
            raise InvalidParameter("degree must be positive")
        super().__init__()
        self.k = k
        self.order = math.factorial(k)
        self.name = f"S_{k}"
        self.identity = tuple(range(k))

    def mul(self, g, h):
        return tuple(g[x] for x in h)

    def inv(self, g):
        out = [0] * self.k
        for i, x in enumerate(g):
            out[x] = i
        return tuple(out)

    def level(self, g) -> int:
        """Least i with g in S_i."""
        moved = [i for i in range(self.k) if g[i] != i]
        return moved[-1] + 1 if moved else 1

    def _generate(self):
        tail = lambda i: tuple(range(i, self.k))
        yield self.identity
        for i in range(2, self.k + 1):
            layer = [p + tail(i) for p in itertools.permutations(range(i)) if p[i - 1] != i - 1]
            yield from sorted(layer)


class SubgroupView(EnumGroup):
    """A finite subgroup given by its element list, inheriting the parent's law."""

    def __init__(self, parent: EnumGroup, elements: Sequence, name: str = ""):
        super().__init__()
        self.parent = parent
        self._elements = tuple(elements)
        self._members = frozenset(self._elements)
        self.order = len(self._elements)
        self.identity = parent.identity
        self.name = name or f"<{self.order} in {parent.name}>"

    def mul(self, g, h):
        return self.parent.mul(g, h)

    def inv(self, g):
        return self.parent.inv(g)

    def _generate(self):
        return iter(self._elements)

    def __contains__(self, g):
        return g in self._members


@dataclass
class FiniteSubgroupChain:
    """G_1 < G_2 < ... < G_k, finite, each a subgroup of the next."""

    groups: list[SubgroupView]
    ambient: EnumGroup | None = None

    def __len__(self):
        return len(self.groups)

    def __getitem__(self, i):
        return self.groups[i]

    def level(self, g) -> int:
        """Least 1-based i with g in G_i; 0 for the identity when G_1 is nontrivial."""
        for i, sub in enumerate(self.groups, start=1):
            if g in sub:
                return i
        raise NotAChain(f"{g!r} outside the chain")

    def verify(self) -> None:
        prev = None
        for i, sub in enumerate(self.groups, start=1):
            els = sub.elements()
            if sub.identity not in sub:
                raise NotAChain(f"G_{i} lacks the identity")
            for g in els:
                if sub.inv(g) not in sub:
                    raise NotAChain(f"G_{i} not closed under inverse at {g!r}")
            for g, h in itertools.product(els, repeat=2):
                if sub.mul(g, h) not in sub:
                    raise NotAChain(f"G_{i} not closed under product at {g!r}, {h!r}")
            if prev is not None:
                if not all(g in sub for g in prev.elements()):
                    raise NotAChain(f"G_{i - 1} not contained in G_{i}")
                if prev.order >= sub.order:
                    raise NotAChain(f"G_{i - 1} -> G_{i} is not strict")
            prev = sub


def symmetric_chain(k: int) -> tuple[Symmetric, FiniteSubgroupChain]:
    group = Symmetric(k)
    levels = [
        SubgroupView(group, [g for g in group.elements() if group.level(g) <= i], f"S_{i}")
        for i in range(1, k + 1)
    ]
    return group, FiniteSubgroupChain(levels, group)


def cyclic_tower(k: int, base: int = 2) -> tuple[Cyclic, FiniteSubgroupChain]:
    """Z_b < Z_{b^2} < ... < Z_{b^k} realized inside Z_{b^k}."""
    if k < 1 or base < 2:
        raise InvalidParameter("tower needs k >= 1 and base >= 2")
    top = base**k
    group = Cyclic(top)
    levels = [
        SubgroupView(group, [g for g in range(top) if g % base ** (k - i) == 0], f"Z_{base ** i}")
        for i in range(1, k + 1)
    ]
    return group, FiniteSubgroupChain(levels, group)


def build_group(text: str) -> tuple[EnumGroup, FiniteSubgroupChain | None]:
    """Parse a family specifier such as ``zn:2``, ``cyclic:3``, ``dsum:2,2,2``,
    ``dsuminf:2``, ``symchain:5`` or ``cyclictower:3``."""
    family, _, arg = text.partition(":")
    try:
        params = [int(a) for a in arg.split(",")] if arg else []
    except ValueError:
        raise InvalidParameter(f"bad parameters in {text!r}") from None
    if not params or any(p < 1 for p in params):
        raise InvalidParameter(f"bad parameters in {text!r}")
    if family == "zn" and len(params) == 1:
        return FreeAbelian(params[0]), None
    if family == "cyclic" and len(params) == 1:
        return Cyclic(params[0]), None
    if family == "dsum":
        return DirectSum(params), None
    if family == "dsuminf" and len(params) == 1:
        return DirectSum(params[0]), None
    if family == "symchain" and len(params) == 1:
        return symmetric_chain(params[0])
    if family == "cyclictower" and len(params) == 1:
        return cyclic_tower(params[0])
    raise InvalidParameter(f"unknown group family {text!r}")


# ---------------------------------------------------------------------------
# metrics


class GroupLsMetric:
    """A left-invariant pseudo-metric on a group given by a norm.

    ``dist(g, h) = norm(g^-1 h)``.  A ``dist`` override is accepted for
    metrics defined directly on pairs (induced metrics, planted
    counterexamples); ``norm(g)`` then means ``dist(1, g)``.
    ``ball`` returns the exact finite ball ``{g : norm(g) < r}`` when the
    metric can certify it, else ``None``.
    """

    def __init__(self, group: EnumGroup, norm=None, dist=None, name: str = "", ball=None):
        if norm is None and dist is None:
            raise ValueError("need a norm or a dist")
        self.group = group
        self.name = name or "metric"
        self._norm = norm
        self._dist = dist
        self._ball = ball

    def norm(self, g):
        if self._norm is not None:
            return self._norm(g)
        return self._dist(self.group.identity, g)

    def dist(self, g, h):
        if self._dist is not None:
            return self._dist(g, h)
        return self._norm(self.group.mul(self.group.inv(g), h))

    def ball(self, r):
        return None if self._ball is None else self._ball(Fraction(r))

    def __repr__(self):
        return f"<GroupLsMetric {self.name} on {self.group.name}>"


def _closed_generators(group, generators):
    gens = []
    for s in list(generators) + [group.inv(s) for s in generators]:
        if s != group.identity and s not in gens:
            gens.append(s)
    return gens


def word_metric(group: EnumGroup, generators: Iterable, horizon: int) -> GroupLsMetric:
    """Word-length metric by breadth-first search to depth ``horizon``."""
    gens = _closed_generators(group, list(generators))
    norms = {group.identity: 0}
    layers = [[group.identity]]
    for depth in range(1, horizon + 1):
        nxt = []
        for g in layers[-1]:
            for s in gens:
                h = group.mul(g, s)
                if h not in norms:
                    norms[h] = depth
                    nxt.append(h)
        if not nxt:
            break
        layers.append(nxt)
    complete = len(layers) <= horizon

    def norm(g):
        try:
            return Fraction(norms[g])
        except KeyError:
            if complete:
                raise Unreachable(g, math.inf) from None
            raise Unreachable(g, horizon + 1) from None

    def ball(r):
        top = math.ceil(r) - 1
        if top > horizon and not complete:
            return None
        return [g for layer in layers[: top + 1] for g in layer]

    names = ",".join(map(str, gens))
    return GroupLsMetric(group, norm=norm, name=f"word[{names}]", ball=ball)


def l1_metric(group: FreeAbelian) -> GroupLsMetric:
    """The word metric of Z^n for the unit generators, in closed form."""

    def ball(r):
        top = math.ceil(r) - 1
        return [g for k in range(top + 1) for g in sorted(_l1_shell(group.rank, k))]

    return GroupLsMetric(group, norm=lambda g: Fraction(sum(map(abs, g))), name="l1", ball=ball)


def weighted_norm_metric(group: EnumGroup, weights: Callable[[int], Any], budget: int = 200) -> GroupLsMetric:
    """Proper left-invariant norm from strictly increasing unbounded weights.

    On a :class:`DirectSum` the norm is the sum of ``weights(i)`` over the
    support.  On any other group the enumerated elements ``g_1, g_2, ...``
    (identity excluded) get weight ``weights(j)`` and the norm is the least
    total weight of a factorization, found by Dijkstra over the first
    ``budget`` of them.
    """
    if isinstance(group, DirectSum):
        return _support_weight_metric(group, weights)

    size = budget if group.order is None else min(budget, group.order - 1)
    elems = group.enumerate(size + 1)[1:]
    cost: dict = {}
    for j, g in enumerate(elems, start=1):
        w = Fraction(weights(j))
        for s in (g, group.inv(g)):
            if s not in cost or w < cost[s]:
                cost[s] = w
    exhaustive = group.order is not None and size == group.order - 1
    cap = math.inf if exhaustive else Fraction(weights(size + 1))

    best = {group.identity: Fraction(0)}
    heap = [(Fraction(0), 0, group.identity)]
    tie = itertools.count(1)
    done = set()
    while heap:
        d, _, g = heapq.heappop(heap)
        if g in done:
            continue
        done.add(g)
        for s, w in cost.items():
            nd = d + w
            if nd >= cap:
                continue
            h = group.mul(g, s)
            if nd < best.get(h, math.inf):
                best[h] = nd
                heapq.heappush(heap, (nd, next(tie), h))

    def norm(g):
        if g in best:
            return best[g]
        raise BudgetExceeded(g, cap)

    def ball(r):
        if r > cap:
            return None
        return [g for g, v in best.items() if v < r]

    return GroupLsMetric(group, norm=norm, name="weighted-word", ball=ball)


def _support_weight_metric(group: DirectSum, weights) -> GroupLsMetric:
    def norm(g):
        return sum(weights(i) for i, _ in g)

    def ball(r):
        # supports with total weight < r; weights increase so the index scan stops
        idx = []
        for i in group.indices():
            if weights(i) >= r:
                break
            idx.append(i)
        out = []
        for k in range(len(idx) + 1):
            for s in itertools.combinations(idx, k):
                if sum(weights(i) for i in s) < r:
                    out += group._expand(s)
        return out

    return GroupLsMetric(group, norm=norm, name="support-weight", ball=ball)


# ---------------------------------------------------------------------------
# checks


def _safe_norm(metric, g, r):
    """Norm of g, or None when it is certainly >= r."""
    try:
        return metric.norm(g)
    except Unreachable as exc:
        if exc.lower_bound >= r:
            return None
        raise


def sampled_ball(metric: GroupLsMetric, r, n: int) -> list:
    out = []
    for g in metric.group.enumerate(n):
        v = _safe_norm(metric, g, r)
        if v is not None and v < r:
            out.append(g)
    return out


@dataclass
class ProperReport:
    ok: bool
    status: str
    ball: list
    r: Fraction
    horizon: int
    certified: bool = False


def check_properness(metric: GroupLsMetric, r, horizon: int, require_certificate: bool = False) -> ProperReport:
    """List ``{h : dist(1, h) < r}`` among the first ``horizon`` elements and
    decide whether that ball has stopped growing.

    Certification comes from the metric's exact ball (or finiteness of the
    group).  Without it the ball on the first ``horizon // 2`` elements is
    compared with the full one.
    """
    r = Fraction(r)
    group = metric.group
    ball = sampled_ball(metric, r, horizon)
    if group.is_finite_at(horizon):
        return ProperReport(True, "exact (finite group)", ball, r, horizon, True)
    exact = metric.ball(r)
    if exact is not None:
        if set(exact) <= set(group.enumerate(horizon)):
            return ProperReport(True, "stabilized", ball, r, horizon, True)
        status = "ball extends past horizon"
    else:
        status = "no norm lower bound"
    if require_certificate:
        raise CannotCertify(f"{metric.name}: {status} at r={r}, horizon={horizon}")
    half = sampled_ball(metric, r, horizon // 2)
    if len(half) == len(ball):
        return ProperReport(True, "stable up to horizon", ball, r, horizon)
    return ProperReport(False, "grows with horizon", ball, r, horizon)


def check_left_invariance(metric: GroupLsMetric, n: int) -> AxiomReport:
    """Exhaustive check of ``d(g, h) == d(fg, fh)`` over enumerated triples."""
    group = metric.group
    els = group.enumerate(n)
    if len(els) < n and not group.is_finite_at(n):
        raise HorizonExceeded(f"{group.name}: {n} elements not enumerable")
    count = 0
    for f, g, h in itertools.product(els, repeat=3):
        count += 1
        if metric.dist(g, h) != metric.dist(group.mul(f, g), group.mul(f, h)):
            return AxiomReport(False, count, "left-invariance", (f, g, h))
    return AxiomReport(True, count)


@dataclass
class GeneratingSet:
    F: list
    M: Fraction
    M_back: Any
    properness: ProperReport


def extract_generating_set(metric: GroupLsMetric, M, horizon: int) -> GeneratingSet:
    """F = B(1, M+1) (strict) and the converse constant max{d(1, f) : f in F}."""
    M = Fraction(M)
    rep = check_properness(metric, M + 1, horizon)
    if not rep.ok:
        raise BallNotStabilized(f"B(1, {M + 1}) not stabilized at horizon {horizon}")
    back = max((metric.norm(f) for f in rep.ball), default=Fraction(0))
    return GeneratingSet(rep.ball, M, back, rep)


@dataclass
class GenerationReport:
    ok: bool
    reached: int
    missing: list = field(default_factory=list)
    depth: int = 0


def verify_generates(group: EnumGroup, F: Iterable, horizon: int, max_nodes: int = 200_000) -> GenerationReport:
    """Does the closure of F under product and inverse reach the first
    ``horizon`` enumerated elements (BFS of depth at most ``horizon``)?"""
    gens = _closed_generators(group, list(F))
    targets = list(group.enumerate(horizon))
    pending = set(targets)
    seen = {group.identity}
    pending.discard(group.identity)
    frontier = deque([group.identity])
    depth = 0
    while pending and frontier and depth < horizon and len(seen) < max_nodes:
        depth += 1
        nxt = deque()
        for g in frontier:
            for s in gens:
                h = group.mul(g, s)
                if h not in seen:
                    seen.add(h)
                    pending.discard(h)
                    nxt.append(h)
        frontier = nxt
    missing = [g for g in targets if g in pending]
    return GenerationReport(not missing, len(targets) - len(missing), missing[:10], depth)
