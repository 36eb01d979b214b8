"""Control tables, coarse-equivalence certificates and quasi-isometry fits.

Control tables use the non-strict form "d(x, y) <= r implies d(f x, f y) <= s";
balls on groups use the strict "d(1, g) < r".  Both are echoed in reports.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

from .core_metrics import LsSpace, scaled, square
from .groups import EnumGroup, GroupLsMetric, sampled_ball

CONTROL_INEQUALITY = "d(x,y) <= r implies d(fx,fy) <= s"
BALL_INEQUALITY = "B(1,r) = {g : d(1,g) < r}"


class UndefinedImage(ValueError):
    pass


class EmptySample(ValueError):
    pass


@dataclass
class ControlTable:
    rows: list[tuple[Any, Any]]
    horizon: int
    pairs: int
    inequality: str = CONTROL_INEQUALITY

    def s(self, r):
        """Recorded s for the largest grid radius <= r (0 below the grid)."""
        best = 0
        for rk, sk in self.rows:
            if rk <= r:
                best = sk
        return best

    def is_monotone(self) -> bool:
        return all(a[1] <= b[1] for a, b in zip(self.rows, self.rows[1:]))


def _images(f, pts):
    out = []
    for p in pts:
        try:
            out.append(f(p))
        except Exception as exc:
            raise UndefinedImage(f"map undefined at {p!r}: {exc}") from exc
    return out


def _pair_distances(f, source: LsSpace, target, pts):
    imgs = _images(f, pts)
    return [
        (source.dist(pts[i], pts[j]), target.dist(imgs[i], imgs[j]))
        for i, j in itertools.combinations(range(len(pts)), 2)
    ]


def _prefix_pairs(pairs, n, m):
    """Pairs of the first m points, out of the combinations-ordered pairs of n."""
    # combinations(range(n), 2) lists (i, j) row by row; rows i < m contribute j < m
    out, start = [], 0
    for i in range(m):
        row = n - 1 - i
        out += pairs[start : start + (m - 1 - i)]
        start += row
    return out


def _table(pairs, r_grid, horizon) -> ControlTable:
    pairs = sorted(pairs, key=lambda p: p[0])
    if r_grid is None:
        r_grid = sorted(set(d for d, _ in pairs))
    rows, k, running = [], 0, 0
    for r in r_grid:
        while k < len(pairs) and pairs[k][0] <= r:
            if pairs[k][1] > running:
                running = pairs[k][1]
            k += 1
        rows.append((r, running))
    return ControlTable(rows, horizon, len(pairs))


def estimate_control(f, source: LsSpace, target, n: int | None = None, r_grid: Sequence | None = None) -> ControlTable:
    """Exact control table of ``f`` over all unordered pairs of the first ``n``
    source points.  ``target`` only needs a ``dist`` method."""
    n = source.horizon if n is None else n
    pts = source.enumerate(n)
    return _table(_pair_distances(f, source, target, pts), r_grid, n)


def _radii_from(pairs) -> list:
    ds = sorted(set(d for d, _ in pairs))
    if not ds:
        return []
    cap = scaled(ds[-1], Fraction(1, 4))
    return [d for d in ds if d <= cap] or ds[:1]


def default_check_radii(space: LsSpace, n: int) -> list:
    """Radii at which finiteness is judged: distinct distances of the half
    sample up to a quarter of its diameter."""
    pts = space.enumerate(n // 2)
    return _radii_from([(space.dist(p, q), None) for p, q in itertools.combinations(pts, 2)])


def _stable(pairs, n, radii):
    full = _table(pairs, radii, n)
    half = _table(_prefix_pairs(pairs, n, n // 2), radii, n // 2)
    return full.rows == half.rows, half, full


def control_stable(f, source: LsSpace, target, n: int, radii: Sequence | None = None) -> tuple[bool, ControlTable, ControlTable]:
    """Recompute the control table at ``n // 2`` and ``n``; stable iff no
    recorded s grows on ``radii`` (default: :func:`default_check_radii`)."""
    pairs = _pair_distances(f, source, target, source.enumerate(n))
    if radii is None:
        radii = _radii_from(_prefix_pairs(pairs, n, n // 2))
    return _stable(pairs, n, radii)


def displacement(f, g_back, space: LsSpace, n: int | None = None):
    """max d(g_back(f(x)), x) over the first ``n`` points."""
    n = space.horizon if n is None else n
    pts = space.enumerate(n)
    back = _images(lambda p: g_back(f(p)), pts)
    return max((space.dist(b, p) for b, p in zip(back, pts)), default=Fraction(0))


@dataclass
class CoarseCertificate:
    forward: ControlTable
    backward: ControlTable
    displacement_fwd: Any
    displacement_bwd: Any
    horizon: int
    forward_stable: bool
    backward_stable: bool
    displacement_stable: bool
    check_radii_fwd: list = field(default_factory=list)
    check_radii_bwd: list = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.forward_stable and self.backward_stable and self.displacement_stable

    @property
    def verdict(self) -> str:
        return "coarse equivalence (up to horizon)" if self.ok else "not certified"


def coarse_equivalence_certificate(
    f,
    g_back,
    X: LsSpace,
    Y: LsSpace,
    n: int | None = None,
    r_grid: Sequence | None = None,
    m: int | None = None,
    radii_fwd: Sequence | None = None,
    radii_bwd: Sequence | None = None,
) -> CoarseCertificate:
    """Control tables both ways plus both displacements.

    Each quantity counts as finite when it does not grow between the half
    sample and the full sample.
    """
    n = X.horizon if n is None else n
    m = Y.horizon if m is None else m
    fwd_pairs = _pair_distances(f, X, Y, X.enumerate(n))
    bwd_pairs = _pair_distances(g_back, Y, X, Y.enumerate(m))
    radii_fwd = _radii_from(_prefix_pairs(fwd_pairs, n, n // 2)) if radii_fwd is None else list(radii_fwd)
    radii_bwd = _radii_from(_prefix_pairs(bwd_pairs, m, m // 2)) if radii_bwd is None else list(radii_bwd)
    fwd = _table(fwd_pairs, r_grid, n)
    bwd = _table(bwd_pairs, r_grid, m)
    fwd_ok = _stable(fwd_pairs, n, radii_fwd)[0]
    bwd_ok = _stable(bwd_pairs, m, radii_bwd)[0]
    dx = displacement(f, g_back, X, n)
    dy = displacement(g_back, f, Y, m)
    disp_ok = displacement(f, g_back, X, n // 2) == dx and displacement(g_back, f, Y, m // 2) == dy
    return CoarseCertificate(fwd, bwd, dx, dy, n, fwd_ok, bwd_ok, disp_ok, radii_fwd, radii_bwd)


# ---------------------------------------------------------------------------
# the group criterion


@dataclass
class UniformityReport:
    E: list
    ok: bool
    status: str
    horizon: int
    half_size: int


def _difference_set(f, G: EnumGroup, H: EnumGroup, F, els) -> list:
    members = set(els)
    img = {x: f(x) for x in els}
    seen = {}
    for x in els:
        fx_inv = H.inv(img[x])
        for t in F:
            y = G.mul(x, t)
            if y in members:
                seen.setdefault(H.mul(fx_inv, img[y]), None)
    return list(seen)


def group_ls_uniform_check(f, G: EnumGroup, H: EnumGroup, F: Sequence, horizon: int) -> UniformityReport:
    """E = {f(x)^-1 f(y) : x^-1 y in F} over the first ``horizon`` elements,
    judged finite when it does not grow from ``horizon // 2`` to ``horizon``."""
    full = _difference_set(f, G, H, F, G.enumerate(horizon))
    if G.is_finite_at(horizon):
        return UniformityReport(full, True, "exact (finite group)", horizon, len(full))
    half = _difference_set(f, G, H, F, G.enumerate(horizon // 2))
    ok = len(half) == len(full)
    return UniformityReport(full, ok, "stable up to horizon" if ok else "grows with horizon", horizon, len(half))


@dataclass
class AgreementRow:
    r: Fraction
    F_size: int
    E: UniformityReport
    max_E_norm: Any
    control_s: Any
    consistent: bool
    e_within_f: bool


@dataclass
class AgreementReport:
    metric_ok: bool
    fe_ok: bool
    rows: list[AgreementRow]
    horizon: int

    @property
    def agree(self) -> bool:
        return self.metric_ok == self.fe_ok and all(row.consistent for row in self.rows)


def equivalence_agreement(f, dG: GroupLsMetric, dH: GroupLsMetric, horizon: int, r_grid: Sequence) -> AgreementReport:
    """Judge ls-uniformity of ``f`` twice: by its control table and by the
    finite-set criterion with F = B(1, r).

    Consistency per radius: the largest H-norm in E is bounded by the
    control value at r, so E lies in B(1, s) for every s above it.
    """
    G, H = dG.group, dH.group
    src = G.as_space(dG, horizon)
    metric_ok, _, table = control_stable(f, src, dH, horizon, r_grid)
    rows = []
    for r in r_grid:
        r = Fraction(r)
        F = dG.ball(r)
        if F is None:
            F = sampled_ball(dG, r, horizon)
        rep = group_ls_uniform_check(f, G, H, F, horizon)
        max_e = max((dH.norm(e) for e in rep.E), default=Fraction(0))
        s = table.s(r)
        fset = set(F)
        rows.append(AgreementRow(r, len(F), rep, max_e, s, max_e <= s, all(e in fset for e in rep.E)))
    return AgreementReport(metric_ok, all(row.E.ok for row in rows), rows, horizon)


# ---------------------------------------------------------------------------
# quasi-isometry constants


@dataclass
class QiFit:
    lam: float
    c: float
    tolerance: float
    pairs: int
    verified: bool
    lam_sq: Fraction | None = None


def fit_qi_constants(f, X: LsSpace, Y, n: int | None = None, d_min=1, tolerance: float = 1e-9) -> QiFit:
    """Fit (1/lam) d - c <= d' <= lam d + c over sampled pairs.

    lam comes from pairs with d >= d_min (exact squared ratios), then c is the
    least slack that makes every sampled pair satisfy both inequalities.
    """
    n = X.horizon if n is None else n
    pts = X.enumerate(n)
    pairs = _pair_distances(f, X, Y, pts)
    d_min = Fraction(d_min)
    lam_sq = None
    for d, e in pairs:
        if d < d_min:
            continue
        if e == 0:
            raise EmptySample("a pair at distance >= d_min collapses to 0; no finite lambda")
        q = square(d) / square(e)
        q = max(q, 1 / q)
        if lam_sq is None or q > lam_sq:
            lam_sq = q
    if lam_sq is None:
        raise EmptySample(f"no sampled pair at distance >= {d_min}")
    lam = math.sqrt(lam_sq)
    c = 0.0
    fl = [(float(d), float(e)) for d, e in pairs]
    for d, e in fl:
        c = max(c, e - lam * d, d / lam - e)
    verified = all(d / lam - c - tolerance <= e <= lam * d + c + tolerance for d, e in fl)
    return QiFit(lam, c, tolerance, len(pairs), verified, lam_sq)
