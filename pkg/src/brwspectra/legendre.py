"""Convex-analysis layer on top of a reproduction law.

Conventions: the conjugate is the concave one,
``conj(alpha) = inf_q {cumulant(q) - <q|alpha>}``, and the spectrum ``f``
equals ``conj`` on the level set ``I = {conj >= 0}`` and ``-inf`` off it.
The free energy is ``hat_P(q) = inf_{0 < t <= 1} cumulant(t q) / t``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DomainMiss, EverywhereInfinite, InconclusiveScan, OutsideDomain
from .laws import ReproductionLaw
from .optimize import golden_section, minimize_box

INF = math.inf
MINUS_INF_FLOOR = -1e6
DEFAULT_BOX = 32.0
RAY_CAP = 64.0
THETA_MIN = 1e-6


@dataclass(frozen=True)
class ConjugateQuery:
    alpha: tuple[float, ...]
    search_box: tuple[tuple[float, float], ...] = ()
    grid_points: int = 33
    refine_iters: int = 20

    def __post_init__(self):
        alpha = tuple(float(a) for a in np.atleast_1d(self.alpha))
        object.__setattr__(self, "alpha", alpha)
        if not self.search_box:
            object.__setattr__(self, "search_box", ((-DEFAULT_BOX, DEFAULT_BOX),) * len(alpha))
        if self.grid_points < 16:
            raise ValueError("grid_points must be >= 16")
        if self.refine_iters < 20:
            raise ValueError("refine_iters must be >= 20")
        if len(self.search_box) != len(alpha) or any(b <= a for a, b in self.search_box):
            raise ValueError("search_box needs one non-empty interval per coordinate")


class ConjugateResult(NamedTuple):
    value: float
    argmin: np.ndarray
    status: str  # "ok" | "minus_infinity"


def conjugate(law: ReproductionLaw, query, max_expansions: int = 16) -> ConjugateResult:
    """Numerical concave conjugate of the cumulant at ``query.alpha``.

    When the minimizer sits on a face of the search box the box is doubled on
    that side (at most ``max_expansions`` times); values dropping below
    ``-1e6`` are reported as ``-inf``.
    """
    if not isinstance(query, ConjugateQuery):
        query = ConjugateQuery(alpha=query)
    alpha = np.asarray(query.alpha)
    if alpha.size != law.dim:
        raise ValueError(f"alpha has {alpha.size} coordinates, law has dim {law.dim}")
    lo = np.array([a for a, _ in query.search_box], dtype=np.float64)
    hi = np.array([b for _, b in query.search_box], dtype=np.float64)

    def objective(q):
        v = law.cumulant(q)
        return v if v == INF else v - float(q @ alpha)

    for _ in range(max_expansions + 1):
        m = minimize_box(objective, lo, hi, query.grid_points, query.refine_iters)
        if m.value == INF:
            raise DomainMiss("cumulant is infinite on the whole search grid", alpha=alpha.tolist())
        if m.value < MINUS_INF_FLOOR:
            return ConjugateResult(-INF, np.asarray(m.x), "minus_infinity")
        step = (hi - lo) / (query.grid_points - 1)
        at_lo = m.x <= lo + 1e-9 * step
        at_hi = m.x >= hi - 1e-9 * step
        if not (at_lo.any() or at_hi.any()):
            break
        width = hi - lo
        lo = np.where(at_lo, lo - width, lo)
        hi = np.where(at_hi, hi + width, hi)
    return ConjugateResult(float(m.value), np.asarray(m.x), "ok")


def conjugate_value(law: ReproductionLaw, alpha, **kw) -> float:
    return conjugate(law, ConjugateQuery(alpha=alpha, **kw)).value


def biconjugate_check(law: ReproductionLaw, q_grid, pad: float = 1.0, grid_points: int = 17) -> float:
    """``max_q |cumulant(q) - sup_alpha{<q|alpha> + conj(alpha)}|`` over ``q_grid``.

    The sup is taken over a box covering the gradients at the grid points,
    padded by ``pad`` on every side.
    """
    qs = [np.atleast_1d(np.asarray(q, dtype=np.float64)) for q in q_grid]
    grads = np.array([law.grad(q) for q in qs])
    lo = grads.min(axis=0) - pad
    hi = grads.max(axis=0) + pad
    worst = 0.0
    for q in qs:
        target = law.cumulant(q)
        if target == INF:
            raise OutsideDomain("biconjugate check needs a finite cumulant", q=q.tolist())

        def neg(alpha, q=q):
            c = conjugate(law, ConjugateQuery(alpha=alpha, grid_points=grid_points)).value
            return INF if c == -INF else -(float(q @ alpha) + c)

        m = minimize_box(neg, lo, hi, grid_points=grid_points)
        worst = max(worst, abs(target + m.value))
    return worst


# ---------------------------------------------------------------------------
# level set I and spectrum
# ---------------------------------------------------------------------------


@dataclass
class LevelSetI:
    dim: int
    lower: float = -INF
    upper: float = INF
    unbounded_lower: bool = False
    unbounded_upper: bool = False
    box: tuple[tuple[float, float], ...] = ()
    tol: float = 1e-9
    law: ReproductionLaw | None = field(default=None, repr=False)

    @property
    def unbounded(self) -> bool:
        return self.unbounded_lower or self.unbounded_upper

    def contains(self, alpha) -> bool:
        a = np.atleast_1d(np.asarray(alpha, dtype=np.float64))
        if self.dim == 1:
            return self.lower - self.tol <= a[0] <= self.upper + self.tol
        if any(not lo <= x <= hi for x, (lo, hi) in zip(a, self.box)):
            return False
        return conjugate_value(self.law, a) >= -self.tol


def _interior_start(law: ReproductionLaw) -> float:
    try:
        return float(law.grad(np.zeros(1))[0])
    except OutsideDomain:
        pass
    for j in range(-4, 21):
        for s in (1.0, -1.0):
            a = s * 2.0**j
            if conjugate_value(law, a) > 0:
                return a
    raise InconclusiveScan("no level with positive conjugate found")


def level_set_I(law: ReproductionLaw, tol: float = 1e-9, box=None, scan_limit: float = 2.0**20) -> LevelSetI:
    """Endpoints of ``I`` in d = 1 (bisection outward from an interior level).

    In higher dimension the result is a membership oracle restricted to ``box``.
    """
    if law.dim > 1:
        if box is None:
            raise ValueError("level_set_I needs a bounding box when dim >= 2")
        return LevelSetI(law.dim, box=tuple(tuple(b) for b in box), tol=tol, law=law)

    def conj(a):
        return conjugate_value(law, a)

    a0 = _interior_start(law)
    ends = []
    for sign in (-1.0, 1.0):
        inside, step = a0, max(1.0, abs(a0))
        outside = None
        while step <= scan_limit:
            a = a0 + sign * step
            if conj(a) < 0:
                outside = a
                break
            inside = a
            step *= 2.0
        if outside is None:
            ends.append(None)
            continue
        lo, hi = inside, outside
        while abs(hi - lo) > 1e-12 * max(1.0, abs(lo)):
            mid = 0.5 * (lo + hi)
            if conj(mid) >= 0:
                lo = mid
            else:
                hi = mid
        ends.append(lo)
    lower, upper = ends
    return LevelSetI(
        1,
        lower=-INF if lower is None else lower,
        upper=INF if upper is None else upper,
        unbounded_lower=lower is None,
        unbounded_upper=upper is None,
        tol=tol,
        law=law,
    )


def spectrum_f(law: ReproductionLaw, alpha, tol: float = 1e-9, **query) -> float:
    """``conj(alpha)`` if ``alpha`` is in ``I`` (up to ``tol``), else ``-inf``.

    Extra keywords are passed on to :class:`ConjugateQuery`.
    """
    v = conjugate_value(law, alpha, **query)
    return v if v >= -tol else -INF


# ---------------------------------------------------------------------------
# free energy and phase transitions
# ---------------------------------------------------------------------------


def ray_bound(law: ReproductionLaw, direction, cap: float = 2.0**20, tol: float = 1e-9) -> tuple[float, bool]:
    """Supremum of ``{t >= 0: cumulant(t * direction) < inf}`` and whether it is attained."""
    known = law.ray_bound(direction)
    if known is not None:
        return known
    d = np.atleast_1d(np.asarray(direction, dtype=np.float64))
    if law.cumulant(d * cap) < INF:
        return INF, True
    lo, hi = 0.0, cap
    for _ in range(200):
        if hi - lo <= tol * max(1.0, lo):
            break
        mid = 0.5 * (lo + hi)
        if law.cumulant(d * mid) < INF:
            lo = mid
        else:
            hi = mid
    else:
        raise InconclusiveScan("could not bracket the domain endpoint", direction=d.tolist())
    return lo, law.cumulant(d * lo) < INF


def gap(law: ReproductionLaw, q) -> float:
    """``cumulant(q) - <q|grad(q)>``; positive on J, zero at second order transitions."""
    q = np.atleast_1d(np.asarray(q, dtype=np.float64))
    return law.cumulant(q) - float(q @ law.grad(q))


class HatP(NamedTuple):
    value: float
    theta: float


def hat_P(law: ReproductionLaw, q, theta_min: float = THETA_MIN) -> HatP:
    """``inf_{0 < t <= 1} cumulant(t q) / t`` and its minimizer.

    ``t -> cumulant(t q)/t`` is unimodal (its derivative has the sign of
    ``-gap(t q)``), so the minimizer is 1 whenever ``gap(q) >= 0``.
    """
    q = np.atleast_1d(np.asarray(q, dtype=np.float64))
    if not np.any(q):
        return HatP(law.cumulant(q), 1.0)
    tb, attained = ray_bound(law, q)
    t_hi = min(1.0, tb)
    if t_hi < theta_min or (t_hi == tb and not attained and t_hi <= theta_min):
        raise EverywhereInfinite("cumulant(t q) is infinite for all t in the bracket", q=q.tolist())
    if not attained and tb <= 1.0:
        t_hi = tb * (1 - 1e-12)

    def h(t):
        v = law.cumulant(t * q)
        return v / t

    try:
        g = gap(law, t_hi * q)
    except OutsideDomain:
        g = None
    if g is not None and g >= 0:
        return HatP(h(t_hi), t_hi)
    m = golden_section(lambda s: h(math.exp(s)), math.log(theta_min), math.log(t_hi), tol=1e-14)
    return HatP(float(m.value), math.exp(m.x))


@dataclass(frozen=True)
class PhaseDiagnosis:
    kind: str  # NoTransition | SecondOrder | FirstOrder | Degenerate
    q_c: float | None = None
    slope: float | None = None
    gap_at_qc: float | None = None  # gap(q_c^-) along the direction


def classify_direction(law: ReproductionLaw, direction=1.0, cap: float = RAY_CAP, tol: float = 1e-12) -> PhaseDiagnosis:
    """Phase-transition type of ``t -> cumulant(t * direction)`` for ``t >= 0``.

    ``direction`` is normalized to a unit vector; ``q_c`` is reported along it.
    """
    d = np.atleast_1d(np.asarray(direction, dtype=np.float64))
    d = d / np.linalg.norm(d)
    tb, attained = ray_bound(law, d)
    if tb == 0:
        return PhaseDiagnosis("Degenerate")

    def g(t):
        return gap(law, t * d)

    def bisect_root(lo, hi):
        while hi - lo > tol * max(1.0, hi):
            mid = 0.5 * (lo + hi)
            if g(mid) > 0:
                lo = mid
            else:
                hi = mid
        qc = 0.5 * (lo + hi)
        return PhaseDiagnosis("SecondOrder", qc, law.cumulant(qc * d) / qc, g(qc))

    if tb == INF:
        t = 1.0 / 64
        prev = 0.0
        while t <= cap:
            if g(t) <= 0:
                return bisect_root(prev, t)
            prev, t = t, 2 * t
        return PhaseDiagnosis("NoTransition")

    # finite endpoint: scan towards it
    end = tb if attained else tb * (1 - 1e-12)
    try:
        g_end = g(end)
    except OutsideDomain as exc:
        raise InconclusiveScan("cannot evaluate the gradient at the domain endpoint") from exc
    if g_end > 0:
        return PhaseDiagnosis("FirstOrder", tb, law.cumulant(end * d) / tb, g_end)
    ts = np.linspace(0.0, end, 65)[1:]
    prev = 0.0
    for t in ts:
        if g(t) <= 0:
            return bisect_root(prev, t)
        prev = t
    raise InconclusiveScan("gap sign change not located")
