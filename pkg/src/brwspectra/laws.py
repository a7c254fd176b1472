"""Reproduction laws of branching random walks.

A law is the joint distribution of ``(N, X_1, ..., X_N)``: the number of
children of a node and the displacement vectors given to them. Each family
below provides

* ``cumulant(q)``: ``log E(sum_i exp<q|X_i>)``, ``+inf`` outside its domain,
* ``grad(q)``: its gradient,
* ``truncated(q, A)``: the same quantity restricted to children ``i <= N ^ A``
  with ``|X_i| <= A``,
* ``offspring(keys)``: a vectorized sampler driven by counter-based node keys
  (analytic-only families raise :class:`NoSampler`).

Infinite cumulant values are plain ``math.inf``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import NamedTuple

import numpy as np
from scipy import integrate
from scipy.special import logsumexp, ndtr

from . import rng as krng
from .errors import (
    ConfigError,
    DegenerateLaw,
    NoSampler,
    NotNormalizable,
    OutsideDomain,
    QuadratureFailure,
    SubcriticalTruncation,
)

QUAD_ABS_TOL = 1e-9
INF = math.inf


class Family(NamedTuple):
    counts: np.ndarray  # (M,) children per parent
    increments: np.ndarray  # (sum counts, d), parent-major
    child_keys: np.ndarray  # (sum counts,) uint64


def _as_vector(q, dim: int) -> np.ndarray:
    v = np.atleast_1d(np.asarray(q, dtype=np.float64))
    if v.shape != (dim,):
        raise ValueError(f"expected a vector of length {dim}, got shape {v.shape}")
    return v


@dataclass(frozen=True)
class OffspringLaw:
    """Finite-support law of the number of children ``N >= 1``."""

    values: tuple[int, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        if len(self.values) != len(self.probs) or not self.values:
            raise ConfigError("offspring values and probs must be non-empty and equal length")
        if min(self.values) < 1:
            raise ConfigError("offspring counts must be >= 1 (no extinction)")
        if any(p < 0 for p in self.probs) or abs(sum(self.probs) - 1.0) > 1e-12:
            raise ConfigError("offspring probabilities must be >= 0 and sum to 1")

    @classmethod
    def constant(cls, n: int) -> "OffspringLaw":
        return cls((int(n),), (1.0,))

    @classmethod
    def from_json(cls, obj) -> "OffspringLaw":
        if isinstance(obj, (int, float)):
            return cls.constant(int(obj))
        return cls(tuple(int(v) for v in obj["values"]), tuple(float(p) for p in obj["probs"]))

    def to_json(self):
        if len(self.values) == 1:
            return self.values[0]
        return {"values": list(self.values), "probs": list(self.probs)}

    @property
    def mean(self) -> float:
        return float(np.dot(self.values, self.probs))

    def mean_capped(self, cap: float) -> float:
        """E(min(N, floor(cap))): the number of children with index i <= cap."""
        if cap != INF:
            cap = math.floor(cap)
        return float(np.dot(np.minimum(self.values, cap), self.probs))

    @property
    def max(self) -> int:
        return max(self.values)

    def draw(self, u: np.ndarray) -> np.ndarray:
        cum = np.cumsum(self.probs)
        idx = np.searchsorted(cum, u, side="right")
        return np.asarray(self.values, dtype=np.int64)[np.minimum(idx, len(self.values) - 1)]


@dataclass(frozen=True)
class ReproductionLaw:
    """Base class; ``shift`` is a constant added to every increment."""

    dim: int
    shift: tuple[float, ...] = field(default=(), kw_only=True)

    family = "abstract"
    has_sampler = True

    def __post_init__(self):
        if not self.shift:
            object.__setattr__(self, "shift", (0.0,) * self.dim)
        if len(self.shift) != self.dim:
            raise ConfigError("shift must have one entry per dimension")

    @property
    def _shift(self) -> np.ndarray:
        return np.asarray(self.shift, dtype=np.float64)

    def shifted(self, delta) -> "ReproductionLaw":
        new = tuple(float(s + x) for s, x in zip(self.shift, _as_vector(delta, self.dim)))
        return replace(self, shift=new)

    # -- cumulant -----------------------------------------------------------
    def cumulant(self, q) -> float:
        q = _as_vector(q, self.dim)
        base = self._cumulant(q)
        if base == INF:
            return INF
        return float(base + q @ self._shift)

    def grad(self, q) -> np.ndarray:
        q = _as_vector(q, self.dim)
        if self.cumulant(q) == INF:
            raise OutsideDomain("cumulant is infinite at q", q=q.tolist())
        return self._grad(q) + self._shift

    def _cumulant(self, q: np.ndarray) -> float:
        raise NotImplementedError

    def _grad(self, q: np.ndarray) -> np.ndarray:
        return finite_difference_grad(lambda x: self.cumulant(x), q) - self._shift

    def hessian(self, q) -> np.ndarray:
        q = _as_vector(q, self.dim)
        h = max(1e-5, 1e-5 * float(np.linalg.norm(q)))
        H = np.empty((self.dim, self.dim))
        for i in range(self.dim):
            e = np.zeros(self.dim)
            e[i] = h
            H[:, i] = (self.grad(q + e) - self.grad(q - e)) / (2 * h)
        return 0.5 * (H + H.T)

    @property
    def mean_offspring(self) -> float:
        raise NotImplementedError

    # -- truncation ---------------------------------------------------------
    def truncated(self, q, A: float) -> tuple[float, float]:
        """``(log E S_A(q), standard error)``; the error is 0 for exact paths."""
        raise NotImplementedError

    # -- domain -------------------------------------------------------------
    def ray_bound(self, direction) -> tuple[float, bool] | None:
        """``(sup{t >= 0: cumulant(t*direction) < inf}, attained)``, or None if unknown."""
        return None

    # -- sampling -----------------------------------------------------------
    def offspring(self, keys: np.ndarray) -> Family:
        raise NoSampler(f"{self.family} is analytic-only and has no sampler")

    # -- serialization ------------------------------------------------------
    def params(self) -> dict:
        raise NotImplementedError

    def to_json(self) -> dict:
        out = {"family": self.family, "dim": self.dim, "params": self.params()}
        if any(self.shift):
            out["shift"] = list(self.shift)
        return out


def finite_difference_grad(fun, q: np.ndarray) -> np.ndarray:
    """Central differences with step ``max(1e-6, 1e-6*|q|)``."""
    q = np.asarray(q, dtype=np.float64)
    h = max(1e-6, 1e-6 * float(np.linalg.norm(q)))
    g = np.empty_like(q)
    for i in range(q.size):
        e = np.zeros_like(q)
        e[i] = h
        fp, fm = fun(q + e), fun(q - e)
        if fp == INF or fm == INF:
            raise OutsideDomain("difference stencil leaves the domain", q=q.tolist(), step=h)
        g[i] = (fp - fm) / (2 * h)
    return g


# ---------------------------------------------------------------------------
# DiscreteFinite
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiscreteFinite(ReproductionLaw):
    """Finitely many atoms ``(p, [x_1, ..., x_N])`` with explicit joint increments."""

    atoms: tuple[tuple[float, tuple[tuple[float, ...], ...]], ...] = ()

    family = "discrete_finite"

    def __post_init__(self):
        super().__post_init__()
        if not self.atoms:
            raise ConfigError("discrete_finite needs at least one atom")
        probs = [p for p, _ in self.atoms]
        if any(p < 0 for p in probs) or abs(sum(probs) - 1.0) > 1e-12:
            raise ConfigError("atom probabilities must be >= 0 and sum to 1 within 1e-12")
        for _, inc in self.atoms:
            if len(inc) < 1:
                raise ConfigError("every atom needs N >= 1 increments")
            if any(len(x) != self.dim for x in inc):
                raise ConfigError("increment vectors must have length dim")
        if self.mean_offspring <= 1:
            raise ConfigError("offspring mean must exceed 1 (supercritical)")
        pts = np.array([x for p, inc in self.atoms if p > 0 for x in inc], dtype=np.float64)
        if np.linalg.matrix_rank(pts - pts[0], tol=1e-12) < self.dim:
            raise DegenerateLaw("all increments lie in one affine hyperplane")

    @classmethod
    def from_atoms(cls, atoms, dim: int | None = None, **kw) -> "DiscreteFinite":
        norm = []
        for p, inc in atoms:
            vecs = tuple(tuple(float(c) for c in np.atleast_1d(x)) for x in inc)
            norm.append((float(p), vecs))
        if dim is None:
            dim = len(norm[0][1][0])
        return cls(dim, atoms=tuple(norm), **kw)

    @cached_property
    def _pairs(self):
        w = np.array([p for p, inc in self.atoms for _ in inc])
        x = np.array([xi for _, inc in self.atoms for xi in inc], dtype=np.float64)
        pos = np.array([i for _, inc in self.atoms for i in range(1, len(inc) + 1)])
        return w, x, pos

    @cached_property
    def _positive(self):
        w, x, _ = self._pairs
        keep = w > 0
        return np.log(w[keep]), x[keep]

    @property
    def mean_offspring(self) -> float:
        return float(sum(p * len(inc) for p, inc in self.atoms))

    def _cumulant(self, q):
        logw, x = self._positive
        a = logw + x @ q
        m = a.max()
        return float(m + math.log(np.exp(a - m).sum()))

    def _grad(self, q):
        logw, x = self._positive
        a = logw + x @ q
        soft = np.exp(a - a.max())
        return (soft @ x) / soft.sum()

    def truncated(self, q, A):
        q = _as_vector(q, self.dim)
        w, x, pos = self._pairs
        xs = x + self._shift
        keep = (w > 0) & (pos <= A) & (np.linalg.norm(xs, axis=1) <= A)
        if not keep.any():
            return -INF, 0.0
        return float(logsumexp(xs[keep] @ q, b=w[keep])), 0.0

    def ray_bound(self, direction):
        return INF, True

    def offspring(self, keys):
        keys = np.asarray(keys, dtype=np.uint64)
        probs = np.array([p for p, _ in self.atoms])
        sizes = np.array([len(inc) for _, inc in self.atoms])
        table = np.zeros((len(self.atoms), sizes.max(), self.dim))
        for k, (_, inc) in enumerate(self.atoms):
            table[k, : len(inc)] = inc
        u = krng.uniforms(keys, 0)
        atom = np.minimum(np.searchsorted(np.cumsum(probs), u, side="right"), len(probs) - 1)
        counts = sizes[atom]
        ck = krng.child_keys(keys, counts)
        pos = krng.child_index(counts) - 1
        inc = table[np.repeat(atom, counts), pos] + self._shift
        return Family(counts, inc, ck)

    def params(self):
        return {"atoms": [{"p": p, "increments": [list(x) for x in inc]} for p, inc in self.atoms]}


# ---------------------------------------------------------------------------
# GaussianIid
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GaussianIid(ReproductionLaw):
    """i.i.d. Gaussian increments with diagonal covariance, independent of N."""

    offspring_law: OffspringLaw = OffspringLaw.constant(2)
    mean: tuple[float, ...] = ()
    variances: tuple[float, ...] = ()

    family = "gaussian_iid"
    mc_samples = 1 << 18

    def __post_init__(self):
        super().__post_init__()
        if not self.mean:
            object.__setattr__(self, "mean", (0.0,) * self.dim)
        if not self.variances:
            object.__setattr__(self, "variances", (1.0,) * self.dim)
        if len(self.mean) != self.dim or len(self.variances) != self.dim:
            raise ConfigError("mean and variances must have length dim")
        if min(self.variances) <= 0:
            raise ConfigError("variances must be > 0")
        if self.mean_offspring <= 1:
            raise ConfigError("offspring mean must exceed 1 (supercritical)")

    @property
    def mean_offspring(self):
        return self.offspring_law.mean

    def _cumulant(self, q):
        lam = np.asarray(self.variances)
        return math.log(self.mean_offspring) + float(q @ np.asarray(self.mean)) + float(lam @ q**2) / 2

    def _grad(self, q):
        return np.asarray(self.mean) + np.asarray(self.variances) * q

    def hessian(self, q):
        return np.diag(self.variances)

    def truncated(self, q, A):
        q = _as_vector(q, self.dim)
        en = self.offspring_law.mean_capped(A)
        mu = np.asarray(self.mean) + self._shift
        lam = np.asarray(self.variances)
        if A == INF:
            return self.cumulant(q), 0.0
        if en == 0:
            return -INF, 0.0
        log_mgf = float(q @ mu + lam @ q**2 / 2)
        centre = mu + lam * q  # mean of the exponentially tilted Gaussian
        if self.dim == 1:
            s = math.sqrt(lam[0])
            a, b = (-A - centre[0]) / s, (A - centre[0]) / s
            mass = ndtr(-a) - ndtr(-b) if a > 0 else ndtr(b) - ndtr(a)
            if mass <= 0:
                return -INF, 0.0
            return math.log(en) + log_mgf + math.log(mass), 0.0
        g = krng.CounterRNG(0).generator()
        z = centre + np.sqrt(lam) * g.standard_normal((self.mc_samples, self.dim))
        p = float(np.mean(np.linalg.norm(z, axis=1) <= A))
        if p == 0:
            return -INF, INF
        se = math.sqrt(p * (1 - p) / self.mc_samples) / p
        return math.log(en) + log_mgf + math.log(p), se

    def ray_bound(self, direction):
        return INF, True

    def offspring(self, keys):
        keys = np.asarray(keys, dtype=np.uint64)
        counts = self.offspring_law.draw(krng.uniforms(keys, 0))
        ck = krng.child_keys(keys, counts)
        z = np.stack([krng.normals(ck, j) for j in range(self.dim)], axis=1)
        inc = np.asarray(self.mean) + np.sqrt(self.variances) * z + self._shift
        return Family(counts, inc, ck)

    def params(self):
        return {
            "offspring": self.offspring_law.to_json(),
            "mean": list(self.mean),
            "variances": list(self.variances),
        }


# ---------------------------------------------------------------------------
# HeavyTilt
# ---------------------------------------------------------------------------


def heavy_tail(x):
    """P(W > x) = exp(-x) (1+x)^-3 for x >= 0."""
    x = np.asarray(x, dtype=np.float64)
    return np.exp(-x) * (1.0 + x) ** -3


def heavy_density(x):
    x = np.asarray(x, dtype=np.float64)
    return np.exp(-x) * ((1.0 + x) ** -3 + 3.0 * (1.0 + x) ** -4)


def _quad(fun, a, b, **kw):
    val, err = integrate.quad(fun, a, b, epsabs=QUAD_ABS_TOL / 10, epsrel=1e-12, limit=400, **kw)
    if not (err <= QUAD_ABS_TOL) or not math.isfinite(val):
        raise QuadratureFailure("adaptive quadrature missed its tolerance", value=val, error=err)
    return val


def heavy_moment(q: float, power: int = 0, lo: float = 0.0, hi: float = INF) -> float:
    """``E(W^power e^{qW}; lo <= W <= hi)`` for ``q <= 1`` (any q if hi is finite)."""
    if hi == INF and q > 1:
        return INF
    lo = max(lo, 0.0)
    if hi <= lo:
        return 0.0
    # rescale so the exponential decay rate is O(1)
    s = max(1.0, 1.0 - q)

    def integrand(y):
        x = y / s
        return x**power * math.exp((q - 1.0) * x) * ((1 + x) ** -3 + 3 * (1 + x) ** -4) / s

    a, b = lo * s, hi * s
    if b == INF:
        cut = max(a, 1.0)
        head = _quad(integrand, a, cut) if cut > a else 0.0
        return head + _quad(integrand, cut, INF)
    return _quad(integrand, a, b)


@dataclass(frozen=True)
class HeavyTilt(ReproductionLaw):
    """d = 1, N constant, X = W - center with P(W > x) = e^{-x}(1+x)^{-3}.

    ``E(e^{qW}) < inf`` exactly when ``q <= 1``, which produces a first order
    phase transition at ``q = 1`` once the law is normalized.
    """

    children: int = 2
    center: float = 0.0

    family = "heavy_tilt"

    def __post_init__(self):
        super().__post_init__()
        if self.dim != 1:
            raise ConfigError("heavy_tilt is one-dimensional")
        if self.children < 2:
            raise ConfigError("heavy_tilt needs a constant N >= 2")

    @property
    def mean_offspring(self):
        return float(self.children)

    @property
    def _offset(self) -> float:
        return self.shift[0] - self.center

    def _cumulant(self, q):
        m = heavy_moment(float(q[0]))
        if m == INF:
            return INF
        return math.log(self.children) + math.log(m) - float(q[0]) * self.center

    def _grad(self, q):
        t = float(q[0])
        return np.array([heavy_moment(t, 1) / heavy_moment(t) - self.center])

    def truncated(self, q, A):
        t = float(_as_vector(q, 1)[0])
        n = self.children if A == INF else min(self.children, math.floor(A))
        if n == 0:
            return -INF, 0.0
        lo, hi = -A - self._offset, A - self._offset
        m = heavy_moment(t, 0, lo, hi)
        if m <= 0:
            return -INF, 0.0
        return math.log(n) + math.log(m) + t * self._offset, 0.0

    def ray_bound(self, direction):
        d = float(_as_vector(direction, 1)[0])
        if d > 0:
            return 1.0 / d, True
        return INF, True

    def offspring(self, keys):
        keys = np.asarray(keys, dtype=np.uint64)
        counts = np.full(keys.shape, self.children, dtype=np.int64)
        ck = krng.child_keys(keys, counts)
        w = heavy_inverse_tail(krng.uniforms(ck, 0))
        return Family(counts, (w + self._offset)[:, None], ck)

    def params(self):
        return {"children": self.children, "center": self.center}


def heavy_inverse_tail(u: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Solve ``P(W > x) = u`` by vectorized bisection on ``[0, -log u]``."""
    u = np.asarray(u, dtype=np.float64)
    lo = np.zeros_like(u)
    hi = -np.log(u)  # tail <= e^{-x}
    while np.max(hi - lo, initial=0.0) > tol:
        mid = 0.5 * (lo + hi)
        above = heavy_tail(mid) > u
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# PercolationBernoulli
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PercolationBernoulli(ReproductionLaw):
    """i.i.d. Bernoulli(p) increments, independent of the tree."""

    offspring_law: OffspringLaw = OffspringLaw.constant(2)
    p: float = 0.5

    family = "percolation_bernoulli"

    def __post_init__(self):
        super().__post_init__()
        if self.dim != 1:
            raise ConfigError("percolation_bernoulli is one-dimensional")
        if not 0 < self.p < 1:
            raise DegenerateLaw("Bernoulli parameter must lie strictly in (0, 1)")
        if self.mean_offspring <= 1:
            raise ConfigError("offspring mean must exceed 1 (supercritical)")

    @property
    def mean_offspring(self):
        return self.offspring_law.mean

    def _cumulant(self, q):
        t = float(q[0])
        return math.log(self.mean_offspring) + float(np.logaddexp(math.log1p(-self.p), math.log(self.p) + t))

    def _grad(self, q):
        t = float(q[0])
        return np.array([1.0 / (1.0 + (1 - self.p) / self.p * math.exp(-t))])

    def truncated(self, q, A):
        t = float(_as_vector(q, 1)[0])
        s = self.shift[0]
        total = 0.0
        for x, w in ((0.0, 1 - self.p), (1.0, self.p)):
            if abs(x + s) <= A:
                total += w * math.exp(t * (x + s))
        en = self.offspring_law.mean_capped(A)
        if total == 0 or en == 0:
            return -INF, 0.0
        return math.log(en) + math.log(total), 0.0

    def ray_bound(self, direction):
        return INF, True

    def offspring(self, keys):
        keys = np.asarray(keys, dtype=np.uint64)
        counts = self.offspring_law.draw(krng.uniforms(keys, 0))
        ck = krng.child_keys(keys, counts)
        x = (krng.uniforms(ck, 0) < self.p).astype(np.float64) + self.shift[0]
        return Family(counts, x[:, None], ck)

    def params(self):
        return {"offspring": self.offspring_law.to_json(), "p": self.p}


# ---------------------------------------------------------------------------
# Analytic-only families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BetaStableAnalytic(ReproductionLaw):
    """Cumulant ``log E(N) - c sum q_i^beta`` on ``[0, inf)^d``, ``+inf`` elsewhere."""

    mean_offspring_value: float = 2.0
    c: float = 1.0
    beta: float = 0.5

    family = "beta_stable_analytic"
    has_sampler = False

    def __post_init__(self):
        super().__post_init__()
        if not 0 < self.beta < 1 or self.c <= 0 or self.mean_offspring_value <= 1:
            raise ConfigError("need 0 < beta < 1, c > 0 and E(N) > 1")

    @property
    def mean_offspring(self):
        return self.mean_offspring_value

    def _cumulant(self, q):
        if np.any(q < 0):
            return INF
        return math.log(self.mean_offspring_value) - self.c * float(np.sum(q**self.beta))

    def _grad(self, q):
        if np.any(q <= 0):
            raise OutsideDomain("gradient undefined on the boundary of [0, inf)^d", q=q.tolist())
        return -self.c * self.beta * q ** (self.beta - 1)

    def ray_bound(self, direction):
        d = _as_vector(direction, self.dim)
        return (INF, True) if np.all(d >= 0) else (0.0, True)

    def params(self):
        return {"mean_offspring": self.mean_offspring_value, "c": self.c, "beta": self.beta}


@dataclass(frozen=True)
class DegenerateAnalytic(ReproductionLaw):
    """Cumulant finite only at the origin (heavy two-sided tails)."""

    mean_offspring_value: float = 2.0

    family = "degenerate_analytic"
    has_sampler = False

    @property
    def mean_offspring(self):
        return self.mean_offspring_value

    def _cumulant(self, q):
        return math.log(self.mean_offspring_value) if not np.any(q) else INF

    def ray_bound(self, direction):
        return 0.0, True

    def params(self):
        return {"mean_offspring": self.mean_offspring_value}


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

_FAMILIES = {
    "discretefinite": DiscreteFinite,
    "gaussianiid": GaussianIid,
    "heavytilt": HeavyTilt,
    "percolationbernoulli": PercolationBernoulli,
    "betastableanalytic": BetaStableAnalytic,
    "degenerateanalytic": DegenerateAnalytic,
}


def law_from_json(obj: dict) -> ReproductionLaw:
    """Build a law from ``{"family": ..., "dim": ..., "params": {...}}``."""
    try:
        name = str(obj["family"]).replace("_", "").replace("-", "").lower()
        cls = _FAMILIES[name]
    except KeyError as exc:
        raise ConfigError(f"unknown or missing law family: {obj.get('family')!r}") from exc
    dim = int(obj.get("dim", 1))
    p = dict(obj.get("params", {}))
    kw = {}
    if "shift" in obj:
        kw["shift"] = tuple(float(s) for s in obj["shift"])
    try:
        if cls is DiscreteFinite:
            atoms = [(a["p"], a["increments"]) for a in p["atoms"]]
            return DiscreteFinite.from_atoms(atoms, dim, **kw)
        if cls is GaussianIid:
            return GaussianIid(
                dim,
                offspring_law=OffspringLaw.from_json(p.get("offspring", 2)),
                mean=tuple(float(x) for x in p.get("mean", [0.0] * dim)),
                variances=tuple(float(x) for x in p.get("variances", [1.0] * dim)),
                **kw,
            )
        if cls is HeavyTilt:
            return HeavyTilt(dim, children=int(p.get("children", 2)), center=float(p.get("center", 0.0)), **kw)
        if cls is PercolationBernoulli:
            return PercolationBernoulli(
                dim, offspring_law=OffspringLaw.from_json(p.get("offspring", 2)), p=float(p["p"]), **kw
            )
        if cls is BetaStableAnalytic:
            return BetaStableAnalytic(
                dim,
                mean_offspring_value=float(p.get("mean_offspring", 2.0)),
                c=float(p.get("c", 1.0)),
                beta=float(p["beta"]),
                **kw,
            )
        return DegenerateAnalytic(dim, mean_offspring_value=float(p.get("mean_offspring", 2.0)), **kw)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad parameters for {obj['family']}: {exc}") from exc


def sample_reproduction(law: ReproductionLaw, rng) -> tuple[int, np.ndarray]:
    """One family ``(N, increments)``; ``rng`` is a numpy Generator."""
    if not law.has_sampler:
        raise NoSampler(f"{law.family} is analytic-only and has no sampler")
    key = rng.integers(0, 2**64, dtype=np.uint64, endpoint=False)
    fam = law.offspring(np.array([key], dtype=np.uint64))
    return int(fam.counts[0]), fam.increments


def cumulant(law: ReproductionLaw, q) -> float:
    return law.cumulant(q)


def cumulant_grad(law: ReproductionLaw, q) -> np.ndarray:
    return law.grad(q)


def truncated_cumulant(law: ReproductionLaw, q, A: float, *, with_stderr: bool = False):
    """``log E(sum_{i <= N^A} 1{|X_i| <= A} e^{<q|X_i>})``.

    Raises :class:`SubcriticalTruncation` when the truncated tree has mean
    offspring ``E(N_A) <= 1``.
    """
    zero = np.zeros(law.dim)
    log_mean, _ = law.truncated(zero, A)
    if not log_mean > 0:
        raise SubcriticalTruncation(f"E(N_A) = {math.exp(log_mean):.6g} <= 1 at A = {A}", A=A)
    value, se = law.truncated(q, A)
    return (value, se) if with_stderr else value


class MandelbrotNormalization(NamedTuple):
    law: ReproductionLaw
    shift: float
    slope_at_one: float  # left derivative of the new cumulant at q = 1
    nondegenerate: bool  # slope_at_one < 0


def normalize_for_mandelbrot(law: ReproductionLaw) -> MandelbrotNormalization:
    """Shift increments by ``-cumulant(1)`` so the new cumulant vanishes at 1."""
    if law.dim != 1:
        raise ConfigError("Mandelbrot normalization is one-dimensional")
    p1 = law.cumulant(1.0)
    if p1 == INF:
        raise NotNormalizable("cumulant is infinite at q = 1")
    new = law.shifted(-p1) if p1 != 0 else law
    slope = float(new.grad(1.0)[0])
    return MandelbrotNormalization(new, -p1, slope, slope < 0)


def truncated_extinction_probability(law: DiscreteFinite, A: float, tol: float = 1e-14) -> float:
    """Extinction probability of a GW process with offspring ``N_A``.

    ``N_A`` counts children ``i <= N ^ A`` with ``|X_i| <= A``; the smallest
    fixed point of its generating function is found by monotone iteration.
    """
    pmf: dict[int, float] = {}
    for p, inc in law.atoms:
        x = np.asarray(inc) + law._shift
        k = int(np.sum((np.arange(1, len(inc) + 1) <= A) & (np.linalg.norm(x, axis=1) <= A)))
        pmf[k] = pmf.get(k, 0.0) + p
    ks = np.array(sorted(pmf))
    ps = np.array([pmf[k] for k in ks])
    s = 0.0
    for _ in range(100000):
        nxt = float(ps @ s**ks)
        if abs(nxt - s) < tol:
            return nxt
        s = nxt
    return s
