"""Breadth-first simulation of branching random walks on Galton-Watson trees.

Trees are never stored whole: a :class:`LevelFront` holds generation ``n``
only, as a key array (one counter-based RNG key per node) and the matrix of
accumulated displacements ``S_n(u)``. Growth is exact and fails hard with
:class:`BudgetExceeded` when a generation would exceed the node budget.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import rng as krng
from .errors import BudgetExceeded, OutsideDomain, RejectionStall
from .laws import (
    DiscreteFinite,
    GaussianIid,
    HeavyTilt,
    PercolationBernoulli,
    ReproductionLaw,
    truncated_cumulant,
)
from .legendre import spectrum_f
from .schedules import ParameterSchedule, truncated_grad

DEFAULT_BUDGET = 2_000_000
INF = math.inf


def logsumexp(a: np.ndarray) -> float:
    """Max-shifted log-sum-exp; ``-inf`` for an empty array."""
    a = np.asarray(a, dtype=np.float64)
    if a.size == 0:
        return -INF
    m = float(a.max())
    if m == -INF:
        return -INF
    return m + math.log(float(np.exp(a - m).sum()))


def grouped_logsumexp(a: np.ndarray, owners: np.ndarray, groups: int) -> np.ndarray:
    """log-sum-exp of ``a`` within contiguous runs of the sorted ``owners``."""
    out = np.full(groups, -INF)
    if a.size == 0:
        return out
    starts = np.flatnonzero(np.r_[True, owners[1:] != owners[:-1]])
    ids = owners[starts]
    m = np.maximum.reduceat(a, starts)
    shifted = np.exp(a - np.repeat(m, np.diff(np.r_[starts, a.size])))
    out[ids] = m + np.log(np.add.reduceat(shifted, starts))
    return out


def _as_q(q, dim: int) -> np.ndarray:
    v = np.atleast_1d(np.asarray(q, dtype=np.float64))
    if v.shape != (dim,):
        raise ValueError(f"expected a vector of length {dim}")
    return v


@dataclass(frozen=True)
class LevelFront:
    depth: int
    keys: np.ndarray = field(repr=False)
    S: np.ndarray = field(repr=False)
    budget: int = DEFAULT_BUDGET

    @classmethod
    def root(cls, dim: int, rng: krng.CounterRNG, budget: int = DEFAULT_BUDGET) -> "LevelFront":
        return cls(0, np.array([rng.root_key], dtype=np.uint64), np.zeros((1, dim)), budget)

    @property
    def size(self) -> int:
        return int(self.keys.size)

    @property
    def dim(self) -> int:
        return int(self.S.shape[1])


def grow_front(law: ReproductionLaw, front: LevelFront) -> LevelFront:
    """Next generation: every entry spawns its children ``S_child = S + X``."""
    fam = law.offspring(front.keys)
    total = int(fam.counts.sum())
    if total > front.budget:
        raise BudgetExceeded(total, front.budget)
    S = np.repeat(front.S, fam.counts, axis=0) + fam.increments
    return LevelFront(front.depth + 1, fam.child_keys, S, front.budget)


def grow(law: ReproductionLaw, depth: int, rng: krng.CounterRNG, budget: int = DEFAULT_BUDGET) -> LevelFront:
    front = LevelFront.root(law.dim, rng, budget)
    for _ in range(depth):
        front = grow_front(law, front)
    return front


def partition_function(front: LevelFront, q) -> tuple[float, float]:
    """``(log Z_n(q), P_n(q) = log Z_n(q) / n)``."""
    if front.depth < 1:
        raise ValueError("partition function needs depth >= 1")
    q = _as_q(q, front.dim)
    log_z = logsumexp(front.S @ q)
    return log_z, log_z / front.depth


def level_count(front: LevelFront, alpha, eps: float) -> int:
    """``#{u : |S_n(u) - n alpha| <= n eps}`` (Euclidean norm)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    alpha = _as_q(alpha, front.dim)
    n = front.depth
    dist = np.linalg.norm(front.S - n * alpha, axis=1)
    return int(np.count_nonzero(dist <= n * eps))


def ldp_count(front: LevelFront, alpha, eps: float) -> float:
    """``n^{-1} log`` of :func:`level_count`; ``-inf`` when the count is 0."""
    c = level_count(front, alpha, eps)
    return math.log(c) / front.depth if c else -INF


def mandelbrot_Y(front: LevelFront, q, law: ReproductionLaw) -> float:
    """``Y_n(q) = sum_u exp(<q|S_n(u)> - n cumulant(q))``."""
    q = _as_q(q, front.dim)
    p = law.cumulant(q)
    if p == INF:
        raise OutsideDomain("cumulant is infinite at q", q=q.tolist())
    return math.exp(logsumexp(front.S @ q) - front.depth * p)


class MartingaleTrace(NamedTuple):
    values: list[float]  # Y_0 .. Y_depth
    kind: str
    weighted_means: list[np.ndarray]  # W-weighted mean of S_n/n, n >= 1
    oracle_means: list[np.ndarray]  # n^{-1} sum_k grad P_{A_k}(q_k)


def inhomogeneous_Y(
    law: ReproductionLaw,
    schedule: ParameterSchedule,
    depth: int,
    rng: krng.CounterRNG,
    budget: int = DEFAULT_BUDGET,
) -> MartingaleTrace:
    """Grow the truncated tree along ``schedule`` and record ``Y_n(schedule)``.

    Children beyond ``N ^ A_k`` or with ``|X| > A_k`` are dropped; the weight of
    a surviving child is ``exp(<q_k|X> - P_{A_k}(q_k))``.
    """
    if depth > schedule.length:
        raise ValueError("depth exceeds the schedule length")
    seg_p = []
    seg_grad = []
    for seg in schedule.segments:
        if seg.A == INF:
            p = law.cumulant(seg.q)
        else:
            p = truncated_cumulant(law, seg.q, seg.A)
        if p == INF:
            raise OutsideDomain("cumulant infinite on a schedule segment", q=list(seg.q))
        seg_p.append(p)
        seg_grad.append(truncated_grad(law, seg.q, seg.A))

    front = LevelFront.root(law.dim, rng, budget)
    keys, S = front.keys, front.S
    t_done = np.zeros(1)
    s_start = np.zeros((1, law.dim))
    c_done = 0.0
    seg_start = 0
    cur = -1
    values = [1.0]
    wmeans, omeans = [], []
    grad_sum = np.zeros(law.dim)
    for k, j, seg in schedule.levels():
        if k > depth:
            break
        q = np.asarray(seg.q)
        if j != cur:
            if cur >= 0:
                prev = np.asarray(schedule.segments[cur].q)
                t_done = t_done + (S - s_start) @ prev
                s_start = S.copy()
                c_done = c_done + (k - 1 - seg_start) * seg_p[cur]
                seg_start = k - 1
            cur = j
        if keys.size == 0:
            values.append(0.0)
            wmeans.append(np.full(law.dim, np.nan))
            grad_sum = grad_sum + seg_grad[j]
            omeans.append(grad_sum / k)
            continue
        fam = law.offspring(keys)
        counts, inc, ck = fam.counts, fam.increments, fam.child_keys
        if int(counts.sum()) > budget:
            raise BudgetExceeded(int(counts.sum()), budget)
        parent = np.repeat(np.arange(keys.size), counts)
        if seg.A != INF:
            keep = (krng.child_index(counts) <= seg.A) & (np.linalg.norm(inc, axis=1) <= seg.A)
            parent, inc, ck = parent[keep], inc[keep], ck[keep]
        S = S[parent] + inc
        t_done = t_done[parent]
        s_start = s_start[parent]
        keys = ck
        logw = t_done + (S - s_start) @ q
        log_y = logsumexp(logw) - (c_done + (k - seg_start) * seg_p[j])
        values.append(math.exp(log_y))
        grad_sum = grad_sum + seg_grad[j]
        omeans.append(grad_sum / k)
        if keys.size:
            w = np.exp(logw - logw.max())
            wmeans.append((w @ S) / w.sum() / k)
        else:
            wmeans.append(np.full(law.dim, np.nan))
    return MartingaleTrace(values, "inhomogeneous", wmeans, omeans)


def gibbs_sample(front: LevelFront, q, rng: np.random.Generator, count: int) -> np.ndarray:
    """Indices of ``count`` entries drawn from the Gibbs measure ``~ exp<q|S>``."""
    q = _as_q(q, front.dim)
    a = front.S @ q
    w = np.exp(a - a.max())
    return rng.choice(front.size, size=count, p=w / w.sum())


# ---------------------------------------------------------------------------
# spine
# ---------------------------------------------------------------------------


class SpineSample(NamedTuple):
    S: np.ndarray  # (paths, d)
    mean: np.ndarray  # S / n
    acceptance: float


def _tilted_heavy(q: float, keys: np.ndarray, attempts_cap: int = 10_000) -> tuple[np.ndarray, int, int]:
    """W drawn from the density proportional to ``e^{qx} f(x)``, 0 < q <= 1."""
    out = np.empty(keys.size)
    pending = np.arange(keys.size)
    proposals = accepted = 0
    attempt = 0
    while pending.size:
        if attempt >= attempts_cap:
            raise RejectionStall("tilted sampler did not finish", attempts=attempt)
        k = krng.raw(keys[pending], 1000 + attempt)
        u1, u2 = krng.uniforms(k, 0), krng.uniforms(k, 1)
        if q >= 1.0:
            # mixture of Lomax(2) with weight 1/3 and Lomax(3) with weight 2/3: exact
            a = np.where(u1 < 1.0 / 3.0, 2.0, 3.0)
            x = u2 ** (-1.0 / a) - 1.0
            ok = np.ones(pending.size, dtype=bool)
        else:
            x = -np.log(u1) / (1.0 - q)
            g = (1 + x) ** -3 + 3 * (1 + x) ** -4
            ok = u2 * 4.0 < g
        proposals += pending.size
        accepted += int(ok.sum())
        out[pending[ok]] = x[ok]
        pending = pending[~ok]
        attempt += 1
    return out, proposals, accepted


def _spine_envelope(law: ReproductionLaw, q: np.ndarray, p: float) -> float | None:
    """Bound on ``S(q) / E S(q)`` used for rejection sampling, None if unbounded."""
    if isinstance(law, DiscreteFinite):
        best = max(
            float(np.exp((np.asarray(inc) + law._shift) @ q).sum()) for pr, inc in law.atoms if pr > 0
        )
        return best / math.exp(p)
    if isinstance(law, PercolationBernoulli):
        t = float(q[0])
        return law.offspring_law.max * math.exp(max(t, 0.0) + t * law.shift[0]) / math.exp(p)
    if isinstance(law, HeavyTilt) and q[0] <= 0:
        return law.children * math.exp(float(q[0]) * law._offset) / math.exp(p)
    return None


def spine_sample(
    law: ReproductionLaw,
    q,
    n: int,
    rng: krng.CounterRNG,
    paths: int = 1,
    stall_rate: float = 1e-4,
) -> SpineSample:
    """Walk ``n`` steps along the size-biased spine tilted by ``q``.

    Each step draws a family from the law size-biased by ``S(q)`` (rejection
    sampling against an envelope) and follows child ``i`` with probability
    ``e^{<q|X_i>}/S(q)``. Gaussian and heavy-tailed families with unbounded
    ``S(q)`` use the equivalent direct draw of the tilted increment.
    """
    q = _as_q(q, law.dim)
    p = law.cumulant(q)
    if p == INF:
        raise OutsideDomain("cumulant is infinite at q", q=q.tolist())
    base = krng.mix64(np.arange(paths, dtype=np.uint64) ^ np.uint64(rng.root_key))
    S = np.zeros((paths, law.dim))
    envelope = _spine_envelope(law, q, p)
    proposals = accepted = 0
    for step in range(n):
        keys = krng.raw(base, step)
        if isinstance(law, GaussianIid):
            z = np.stack([krng.normals(keys, j) for j in range(law.dim)], axis=1)
            lam = np.asarray(law.variances)
            S += np.asarray(law.mean) + lam * q + np.sqrt(lam) * z + law._shift
            proposals += paths
            accepted += paths
            continue
        if envelope is None and isinstance(law, HeavyTilt):
            w, pr, ac = _tilted_heavy(float(q[0]), keys)
            S[:, 0] += w + law._offset
            proposals += pr
            accepted += ac
            continue
        if envelope is None:
            raise RejectionStall(f"no spine envelope for {law.family} at q", q=q.tolist())
        inc, pr, ac = _size_biased_step(law, q, p, envelope, keys)
        S += inc
        proposals += pr
        accepted += ac
        if proposals >= 10_000 and accepted / proposals < stall_rate:
            raise RejectionStall("spine acceptance rate below threshold", rate=accepted / proposals)
    return SpineSample(S, S / n, accepted / max(proposals, 1))


def _size_biased_step(law, q, p, envelope, keys, attempts_cap: int = 100_000):
    out = np.empty((keys.size, law.dim))
    pending = np.arange(keys.size)
    proposals = accepted = 0
    attempt = 0
    while pending.size:
        if attempt >= attempts_cap:
            raise RejectionStall("size-biased sampler did not finish", attempts=attempt)
        k = krng.raw(keys[pending], 1000 + attempt)
        fam = law.offspring(k)
        e = np.exp(fam.increments @ q)
        starts = np.cumsum(fam.counts) - fam.counts
        s_q = np.add.reduceat(e, starts)
        u = krng.uniforms(k, 7)
        ok = u * envelope * math.exp(p) < s_q
        proposals += pending.size
        accepted += int(ok.sum())
        if ok.any():
            # pick child proportionally to e^{<q|X_i>} inside each accepted family
            v = krng.uniforms(k, 8)
            cum = np.cumsum(e)
            before = np.where(starts > 0, cum[starts - 1], 0.0)
            target = before + v * s_q
            pick = np.searchsorted(cum, target, side="right")
            pick = np.minimum(pick, starts + fam.counts - 1)
            out[pending[ok]] = fam.increments[pick[ok]]
        pending = pending[~ok]
        attempt += 1
    return out, proposals, accepted


# ---------------------------------------------------------------------------
# pruned subtrees and subtree martingales
# ---------------------------------------------------------------------------


class PrunedSubtree(NamedTuple):
    counts: list[int]  # #A_n per level n = 1..depth
    count_exponents: list[float]  # n^{-1} log #A_n (-inf when empty)
    restricted: dict[float, list[float]]  # q -> n^{-1} log sum_{A_n} e^{<q|S_n>}
    eps: list[float]


def eps_schedule(eps0: float, depth: int, rule: str = "constant") -> list[float]:
    if rule == "constant":
        return [eps0] * depth
    if rule == "decay":
        return [eps0 * n ** -0.25 for n in range(1, depth + 1)]
    raise ValueError(f"unknown eps rule {rule!r}")


def prune_subtree(
    law: ReproductionLaw,
    alpha,
    depth: int,
    rng: krng.CounterRNG,
    eps0: float = 0.1,
    eps_rule: str = "constant",
    q_list=(),
    budget: int = DEFAULT_BUDGET,
    check_level: bool = True,
) -> PrunedSubtree:
    """Per-level restriction ``A_n = {u : |S_n(u)/n - alpha| <= eps_n}``.

    Reports the count exponent and the restricted free energy for each ``q``
    in ``q_list``.
    """
    alpha = _as_q(alpha, law.dim)
    if check_level and spectrum_f(law, alpha) == -INF:
        raise ValueError("alpha lies outside the level set I")
    eps = eps_schedule(eps0, depth, eps_rule)
    qs = [float(q) if law.dim == 1 else tuple(np.atleast_1d(q)) for q in q_list]
    front = LevelFront.root(law.dim, rng, budget)
    counts, exps = [], []
    restricted: dict = {q: [] for q in qs}
    for n in range(1, depth + 1):
        front = grow_front(law, front)
        dist = np.linalg.norm(front.S / n - alpha, axis=1)
        mask = dist <= eps[n - 1]
        c = int(mask.sum())
        counts.append(c)
        exps.append(math.log(c) / n if c else -INF)
        sub = front.S[mask]
        for q in qs:
            restricted[q].append(logsumexp(sub @ np.atleast_1d(q)) / n)
    return PrunedSubtree(counts, exps, restricted, eps)


def subtree_log_Y(
    front: LevelFront,
    law: ReproductionLaw,
    q,
    horizon: int,
    budget: int | None = None,
) -> np.ndarray:
    """``log Y_h`` of the subtree hanging from each entry of ``front``.

    Parents are processed in chunks so the live front stays within budget;
    the keyed RNG makes the result independent of the chunking.
    """
    q = _as_q(q, law.dim)
    p = law.cumulant(q)
    if p == INF:
        raise OutsideDomain("cumulant is infinite at q", q=q.tolist())
    budget = front.budget if budget is None else budget
    branching = _max_children(law)
    chunk = max(1, budget // max(1, branching**horizon))
    out = np.empty(front.size)
    for start in range(0, front.size, chunk):
        stop = min(front.size, start + chunk)
        keys = front.keys[start:stop]
        dS = np.zeros((stop - start, law.dim))
        owner = np.arange(stop - start)
        for _ in range(horizon):
            fam = law.offspring(keys)
            if int(fam.counts.sum()) > budget:
                raise BudgetExceeded(int(fam.counts.sum()), budget)
            owner = np.repeat(owner, fam.counts)
            dS = np.repeat(dS, fam.counts, axis=0) + fam.increments
            keys = fam.child_keys
        out[start:stop] = grouped_logsumexp(dS @ q, owner, stop - start) - horizon * p
    return out


def _max_children(law: ReproductionLaw) -> int:
    if isinstance(law, DiscreteFinite):
        return max(len(inc) for _, inc in law.atoms)
    if isinstance(law, (GaussianIid, PercolationBernoulli)):
        return law.offspring_law.max
    if isinstance(law, HeavyTilt):
        return law.children
    return 2

