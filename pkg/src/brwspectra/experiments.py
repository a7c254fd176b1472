"""Theory-vs-simulation experiments.

Each experiment returns an :class:`ExperimentReport`. Theory columns come from
pure ``laws``/``legendre`` calls; empirical columns come from independent
trials, each driven by its own counter-based stream, so the result does not
depend on how the trials are spread over worker processes.
"""
from __future__ import annotations

import functools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from importlib import resources

import numpy as np

from . import rng as krng
from .errors import ConfigError
from .gwtree import (
    DEFAULT_BUDGET,
    grow,
    inhomogeneous_Y,
    ldp_count,
    gibbs_sample,
    logsumexp,
    mandelbrot_Y,
    partition_function,
    prune_subtree,
    spine_sample,
    subtree_log_Y,
)
from .laws import DiscreteFinite, ReproductionLaw
from .legendre import (
    ConjugateQuery,
    biconjugate_check,
    classify_direction,
    conjugate,
    gap,
    hat_P,
    level_set_I,
)
from .optimize import golden_section
from .report import FAIL, INFO, PASS, THEORY, ExperimentReport, Row, verdict
from .schedules import ParameterSchedule

INF = math.inf
EMPTY = "empty-set"
BOUNDARY = "boundary"


@functools.lru_cache(maxsize=1)
def _defaults_text() -> str:
    return resources.files(__package__).joinpath("defaults.json").read_text()


def load_defaults() -> dict:
    """A fresh copy of the packaged default settings."""
    return json.loads(_defaults_text())


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def run_trials(fn, rng: krng.CounterRNG, trials: int, workers: int = 1) -> list:
    """``[fn(rng.trial(t)) for t in range(trials)]``, optionally in processes.

    ``fn`` must be picklable (a module-level function or a partial of one).
    Results come back in trial order whatever the worker count.
    """
    streams = [rng.trial(t) for t in range(trials)]
    if workers <= 1 or trials < 2:
        return [fn(s) for s in streams]
    workers = min(workers, trials)
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, streams, chunksize=max(1, trials // (4 * workers))))


def _vec(x, dim: int) -> np.ndarray:
    v = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if v.shape != (dim,):
        raise ConfigError(f"expected a point with {dim} coordinates, got {v.tolist()}")
    return v


def _grid(x) -> tuple[float, ...]:
    return tuple(float(v) for v in np.atleast_1d(x))


def _iqr_half(values) -> float:
    a = np.asarray(values, dtype=np.float64)
    a = a[np.isfinite(a)]
    if a.size < 2:
        return 0.0
    q75, q25 = np.percentile(a, [75, 25])
    return float(q75 - q25) / 2


def _median(values) -> float:
    # -inf entries are kept: a majority of empty counts gives a -inf median
    return float(np.median(np.asarray(values, dtype=np.float64)))


def _mean_se(values) -> tuple[float, float]:
    a = np.asarray(values, dtype=np.float64)
    if a.size < 2:
        return float(a.mean()), 0.0
    return float(a.mean()), float(a.std(ddof=1) / math.sqrt(a.size))


def _query(law: ReproductionLaw, alpha, legendre: dict | None) -> ConjugateQuery:
    leg = legendre or {}
    box = float(leg.get("search_box", 32.0))
    return ConjugateQuery(
        alpha=alpha, search_box=((-box, box),) * law.dim, grid_points=int(leg.get("grid_points", 33))
    )


def conj(law: ReproductionLaw, alpha, legendre: dict | None = None) -> float:
    return conjugate(law, _query(law, alpha, legendre)).value


def spectrum(law: ReproductionLaw, alpha, legendre: dict | None = None) -> float:
    tol = float((legendre or {}).get("tol", 1e-9))
    v = conj(law, alpha, legendre)
    return v if v >= -tol else -INF


def _band(diff: float, se: float, k: float) -> bool:
    return abs(diff) <= k * se + 1e-12


def is_plus_minus_one(law: ReproductionLaw) -> bool:
    """The deterministic binary law with increments +1 and -1."""
    if not isinstance(law, DiscreteFinite) or law.dim != 1 or len(law.atoms) != 1 or any(law.shift):
        return False
    inc = sorted(float(x[0]) for x in law.atoms[0][1])
    return inc == [-1.0, 1.0]


def binomial_restricted(n: int, alpha: float, eps: float, qs=()) -> tuple[float, dict]:
    """Exact restricted count exponent and free energies of the +-1 tree.

    Level ``n`` has ``C(n, k)`` nodes at position ``n - 2k``; the restriction
    keeps positions with ``|S/n - alpha| <= eps``.
    """
    ks = [k for k in range(n + 1) if abs((n - 2 * k) / n - alpha) <= eps]
    if not ks:
        return -INF, {q: -INF for q in qs}
    count = sum(math.comb(n, k) for k in ks)
    logc = np.array([math.log(math.comb(n, k)) for k in ks])
    S = np.array([n - 2 * k for k in ks], dtype=np.float64)
    return math.log(count) / n, {q: logsumexp(logc + q * S) / n for q in qs}


# ---------------------------------------------------------------------------
# free energy
# ---------------------------------------------------------------------------


def _fe_trial(stream, law, depth, qs, budget):
    front = grow(law, depth, stream, budget)
    return [partition_function(front, q)[1] for q in qs]


def free_energy_curve(
    law: ReproductionLaw,
    q_grid,
    depth: int,
    trials: int,
    seed: int,
    *,
    tol: float = 0.08,
    tol_transition: float = 0.15,
    budget: int = DEFAULT_BUDGET,
    workers: int = 1,
) -> ExperimentReport:
    """Median ``P_n(q)`` over trials against ``hat_P(q)``.

    Points past a transition (``theta* < 1``) use ``tol_transition``, since
    convergence there is slow.
    """
    qs = [_vec(q, law.dim) for q in q_grid]
    fn = functools.partial(_fe_trial, law=law, depth=depth, qs=qs, budget=budget)
    res = np.array(run_trials(fn, krng.CounterRNG(seed), trials, workers))
    rows = []
    for i, q in enumerate(qs):
        hp = hat_P(law, q)
        emp = _median(res[:, i])
        t = tol if hp.theta >= 1.0 else tol_transition
        rows.append(
            Row("P_n", _grid(q), hp.value, emp, _iqr_half(res[:, i]), depth, trials, verdict(abs(emp - hp.value) <= t))
        )
    return ExperimentReport("free-energy", law.to_json(), rows)


# ---------------------------------------------------------------------------
# large deviations
# ---------------------------------------------------------------------------


def _ldp_trial(stream, law, depth, alphas, eps, budget):
    front = grow(law, depth, stream, budget)
    return [ldp_count(front, a, eps) for a in alphas]


def ldp_spectrum(
    law: ReproductionLaw,
    alpha_grid,
    eps: float,
    depth: int,
    trials: int,
    seed: int,
    *,
    tol: float = 0.15,
    empty_frequency: float = 0.95,
    legendre: dict | None = None,
    budget: int = DEFAULT_BUDGET,
    workers: int = 1,
) -> ExperimentReport:
    """Median ``f(n, alpha, eps)`` against the spectrum.

    Off ``I`` the theory value is ``-inf``; those rows report the fraction of
    trials with an empty count and pass when it reaches ``empty_frequency``.
    """
    alphas = [_vec(a, law.dim) for a in alpha_grid]
    fn = functools.partial(_ldp_trial, law=law, depth=depth, alphas=alphas, eps=eps, budget=budget)
    res = np.array(run_trials(fn, krng.CounterRNG(seed), trials, workers))
    rows = []
    for i, a in enumerate(alphas):
        f = spectrum(law, a, legendre)
        col = res[:, i]
        if f == -INF:
            freq = float(np.mean(col == -INF))
            rows.append(Row("empty_frequency", _grid(a), f, freq, 0.0, depth, trials, verdict(freq >= empty_frequency)))
        else:
            emp = _median(col)
            rows.append(Row("f", _grid(a), f, emp, _iqr_half(col), depth, trials, verdict(abs(emp - f) <= tol)))
    return ExperimentReport("ldp", law.to_json(), rows)


# ---------------------------------------------------------------------------
# dimensions of level sets
# ---------------------------------------------------------------------------


def dimension_report(
    law: ReproductionLaw,
    points,
    *,
    unbounded: bool = False,
    depth: int = 0,
    trials: int = 16,
    eps: float = 0.2,
    seed: int | None = None,
    legendre: dict | None = None,
    grid_per_segment: int = 16,
    budget: int = DEFAULT_BUDGET,
    workers: int = 1,
) -> ExperimentReport:
    """Hausdorff and packing dimensions of the set of branches with limit set K.

    ``K`` is the polygonal chain through ``points`` (a single point allowed).
    The infimum of the concave spectrum along a segment sits at an endpoint;
    a grid scan along the chain cross-checks it. The supremum is found by a
    golden-section search per segment. With ``depth > 0`` the LDP count at each
    vertex is added as an informational column.
    """
    pts = [_vec(p, law.dim) for p in points]
    if not pts:
        raise ConfigError("dimension_report needs at least one point")
    vals = [spectrum(law, p, legendre) for p in pts]
    rows: list[Row] = []
    chain = tuple(float(x) for p in pts for x in p)
    inside = all(v > -INF for v in vals)
    rows.append(Row("nonempty", chain, float(inside)))
    if not inside:
        rows.append(Row("dim", chain, -INF, verdict=EMPTY))
        rows.append(Row("Dim", chain, -INF, verdict=EMPTY))
    else:
        dim_ = min(vals)
        scan = []
        sup = max(vals)
        for a, b in zip(pts[:-1], pts[1:]):
            for t in np.linspace(0.0, 1.0, grid_per_segment + 1):
                scan.append(conj(law, a + t * (b - a), legendre))

            def neg(t, a=a, b=b):
                return -conj(law, a + t * (b - a), legendre)

            sup = max(sup, -golden_section(neg, 0.0, 1.0, tol=1e-8).value)
        rows.append(Row("dim", chain, dim_))
        if scan:
            grid_inf = min(scan)
            rows.append(Row("dim_grid_check", chain, dim_, grid_inf, 0.0, verdict=verdict(grid_inf >= dim_ - 1e-8)))
        Dim = law.cumulant(np.zeros(law.dim)) if unbounded else sup
        rows.append(Row("Dim", chain, Dim))
    for p, v in zip(pts, vals):
        rows.append(Row("spectrum", _grid(p), v))
    if depth > 0:
        if seed is None:
            raise ConfigError("a seed is required for the LDP proxy column")
        fn = functools.partial(_ldp_trial, law=law, depth=depth, alphas=pts, eps=eps, budget=budget)
        res = np.array(run_trials(fn, krng.CounterRNG(seed), trials, workers))
        for i, (p, v) in enumerate(zip(pts, vals)):
            rows.append(Row("ldp_proxy", _grid(p), v, _median(res[:, i]), _iqr_half(res[:, i]), depth, trials, INFO))
    return ExperimentReport("dimension", law.to_json(), rows)


# ---------------------------------------------------------------------------
# dimension of the Mandelbrot measure
# ---------------------------------------------------------------------------


def _gibbs_trial(stream, law, q, depth, budget):
    front = grow(law, depth, stream, budget)
    idx = gibbs_sample(front, q, stream.generator(0), 1)
    return front.S[idx[0]] / depth


def measure_dimension_check(
    law: ReproductionLaw,
    q,
    depth: int,
    samples: int,
    seed: int,
    *,
    method: str = "auto",
    se_band: float = 3.0,
    boundary_tol: float = 1e-3,
    budget: int = DEFAULT_BUDGET,
    workers: int = 1,
) -> ExperimentReport:
    """Local exponent ``cumulant(q) - <q|S_n/n>`` of Gibbs-typical branches.

    Its mean is compared to ``conj(grad(q)) = gap(q)`` within ``se_band``
    standard errors. ``gibbs`` draws one branch from each of ``samples``
    independent trees; ``spine`` walks ``samples`` size-biased spine paths;
    ``auto`` uses Gibbs sampling when ``E(N)^depth`` fits the budget.
    """
    q = _vec(q, law.dim)
    p = law.cumulant(q)
    if method == "auto":
        method = "gibbs" if depth * math.log(law.mean_offspring) <= math.log(budget) else "spine"
    if method == "gibbs":
        fn = functools.partial(_gibbs_trial, law=law, q=q, depth=depth, budget=budget)
        means = np.array(run_trials(fn, krng.CounterRNG(seed), samples, workers))
    elif method == "spine":
        means = spine_sample(law, q, depth, krng.CounterRNG(seed), paths=samples).mean
    else:
        raise ConfigError(f"unknown sampling method {method!r}")
    expo = p - means @ q
    mean, se = _mean_se(expo)
    theory = gap(law, q)
    quantity = "local_exponent" if abs(theory) > boundary_tol else "local_exponent_boundary"
    rows = [Row(quantity, _grid(q), theory, mean, se, depth, samples, verdict(_band(mean - theory, se, se_band)))]
    rep = ExperimentReport("measure-dimension", law.to_json(), rows)
    rep.extra = {"method": method, "boundary": quantity.endswith(BOUNDARY)}
    return rep


# ---------------------------------------------------------------------------
# pruned subtrees
# ---------------------------------------------------------------------------


def _subtree_trial(stream, law, alpha, depth, eps0, eps_rule, qs, budget):
    ps = prune_subtree(law, alpha, depth, stream, eps0, eps_rule, qs, budget, check_level=False)
    return [ps.count_exponents[-1]] + [ps.restricted[q][-1] for q in ps.restricted]


def subtree_report(
    law: ReproductionLaw,
    alpha,
    q_list,
    depth: int,
    trials: int,
    seed: int,
    *,
    eps0: float = 0.1,
    eps_rule: str = "constant",
    tol: float = 0.1,
    legendre: dict | None = None,
    budget: int = DEFAULT_BUDGET,
    workers: int = 1,
) -> ExperimentReport:
    """Growth of the branches that stay near ``alpha``.

    Theory: ``conj(alpha)`` for the count exponent and ``q alpha + conj(alpha)``
    for the pruned-set exponent at each ``q``. On the +-1 law an exact binomial
    row checks the simulation itself.
    """
    if law.dim != 1:
        raise ConfigError("subtree_report is one-dimensional")
    a = float(_vec(alpha, 1)[0])
    f = spectrum(law, a, legendre)
    if f == -INF:
        raise ConfigError(f"alpha = {a} lies outside the level set I")
    qs = [float(q) for q in q_list]
    fn = functools.partial(
        _subtree_trial, law=law, alpha=a, depth=depth, eps0=eps0, eps_rule=eps_rule, qs=qs, budget=budget
    )
    res = np.array(run_trials(fn, krng.CounterRNG(seed), trials, workers))
    rows = []
    emp = _median(res[:, 0])
    rows.append(Row("count_exponent", (a,), f, emp, _iqr_half(res[:, 0]), depth, trials, verdict(abs(emp - f) <= tol)))
    for i, q in enumerate(qs, start=1):
        th = q * a + f
        e = _median(res[:, i])
        rows.append(
            Row("pruned_set_exponent", (a, q), th, e, _iqr_half(res[:, i]), depth, trials, verdict(abs(e - th) <= tol))
        )
    if is_plus_minus_one(law) and eps_rule == "constant":
        exact_c, exact_fe = binomial_restricted(depth, a, eps0, qs)
        rows.append(Row("binomial_oracle_count", (a,), exact_c, emp, 0.0, depth, trials, verdict(abs(emp - exact_c) <= 1e-12)))
        for i, q in enumerate(qs, start=1):
            e = _median(res[:, i])
            ok = abs(e - exact_fe[q]) <= 1e-12
            rows.append(Row("binomial_oracle_pruned", (a, q), exact_fe[q], e, 0.0, depth, trials, verdict(ok)))
    return ExperimentReport("subtree", law.to_json(), rows)


# ---------------------------------------------------------------------------
# L^q spectrum of the Mandelbrot measure
# ---------------------------------------------------------------------------


def _mu_trial(stream, law, depth, horizons, qs, budget):
    front = grow(law, depth, stream, budget)
    out = []
    for h in horizons:
        log_mu = front.S[:, 0] + subtree_log_Y(front, law, 1.0, h, budget)
        out.append([logsumexp(q * log_mu) / depth for q in qs])
    return out


def mandelbrot_lq_spectrum(
    law: ReproductionLaw,
    q_grid,
    depth: int,
    trials: int,
    seed: int,
    *,
    horizons=(2, 4, 8),
    tol: float = 0.05,
    tol_other: float = 0.1,
    budget: int = DEFAULT_BUDGET,
    workers: int = 1,
) -> ExperimentReport:
    """``P_{mu,n}(q) = n^{-1} log sum_u mu([u])^q`` against ``hat_P(q)``.

    The law must be normalized (cumulant zero at 1). The mass of a cylinder is
    approximated by ``exp(S_n(u)) Y_h`` of the subtree at ``u``. Verdicts use the
    largest horizon, with tolerance ``tol`` at ``q = 1`` and ``tol_other``
    elsewhere; smaller horizons are informational. Past a transition
    (``theta* < 1``) the finite-n value carries a ``log n / n`` correction, so
    those rows are informational and labelled ``P_mu_linear_branch``. The
    annealed row ``n^{-1} log mean(sum mu^q)`` is informational too.
    """
    if law.dim != 1:
        raise ConfigError("the L^q spectrum is implemented for one-dimensional laws")
    p1 = law.cumulant(1.0)
    if not abs(p1) <= 1e-9:
        raise ConfigError(f"law is not normalized: cumulant(1) = {p1!r}")
    horizons = sorted(int(h) for h in horizons)
    qs = [float(q) for q in q_grid]
    fn = functools.partial(_mu_trial, law=law, depth=depth, horizons=horizons, qs=qs, budget=budget)
    res = np.array(run_trials(fn, krng.CounterRNG(seed), trials, workers))  # trials x h x q
    rows = []
    for j, q in enumerate(qs):
        hp = hat_P(law, q)
        linear = hp.theta < 1.0
        name = "P_mu_linear_branch" if linear else "P_mu"
        for k, h in enumerate(horizons):
            col = res[:, k, j]
            emp = _median(col)
            if h == horizons[-1] and not linear:
                t = tol if q == 1.0 else tol_other
                v = verdict(abs(emp - hp.value) <= t)
            else:
                v = INFO
            rows.append(Row(name, (q, float(h)), hp.value, emp, _iqr_half(col), depth, trials, v))
        col = res[:, -1, j]
        annealed = (logsumexp(depth * col) - math.log(trials)) / depth
        rows.append(Row("P_mu_annealed", (q, float(horizons[-1])), hp.value, annealed, math.nan, depth, trials, INFO))
    return ExperimentReport("mu-lq", law.to_json(), rows)


# ---------------------------------------------------------------------------
# martingales
# ---------------------------------------------------------------------------


def _mart_trial(stream, law, depth, qs, budget):
    front = grow(law, depth, stream, budget)
    return [mandelbrot_Y(front, q, law) for q in qs]


def martingale_report(
    law: ReproductionLaw,
    q_grid,
    depth: int,
    trials: int,
    seed: int,
    *,
    se_band: float = 4.0,
    budget: int = DEFAULT_BUDGET,
    workers: int = 1,
) -> ExperimentReport:
    """Trial mean of ``Y_n(q)`` against 1 within ``se_band`` standard errors."""
    qs = [_vec(q, law.dim) for q in q_grid]
    fn = functools.partial(_mart_trial, law=law, depth=depth, qs=qs, budget=budget)
    res = np.array(run_trials(fn, krng.CounterRNG(seed), trials, workers))
    rows = []
    for i, q in enumerate(qs):
        mean, se = _mean_se(res[:, i])
        rows.append(Row("Y_mean", _grid(q), 1.0, mean, se, depth, trials, verdict(_band(mean - 1.0, se, se_band))))
        rows.append(Row("Y_median", _grid(q), math.nan, _median(res[:, i]), _iqr_half(res[:, i]), depth, trials, INFO))
    return ExperimentReport("martingale", law.to_json(), rows)


def _inhom_trial(stream, law, schedule, depth, budget):
    tr = inhomogeneous_Y(law, schedule, depth, stream, budget)
    return tr.values[1:], [w.tolist() for w in tr.weighted_means], [o.tolist() for o in tr.oracle_means]


def inhomogeneous_report(
    law: ReproductionLaw,
    schedule: ParameterSchedule,
    depth: int,
    trials: int,
    seed: int,
    *,
    se_band: float = 4.0,
    budget: int = DEFAULT_BUDGET,
    workers: int = 1,
) -> ExperimentReport:
    """Mean-one check of the inhomogeneous martingale at every level.

    Informational rows compare the ``Y``-weighted mean of ``S_n/n`` (median
    over trials) with the running average of the scheduled gradients.
    """
    if depth > schedule.length:
        raise ConfigError(f"depth {depth} exceeds the schedule length {schedule.length}")
    fn = functools.partial(_inhom_trial, law=law, schedule=schedule, depth=depth, budget=budget)
    out = run_trials(fn, krng.CounterRNG(seed), trials, workers)
    Y = np.array([o[0] for o in out])
    W = np.array([o[1] for o in out])  # trials x depth x dim
    oracle = np.array(out[0][2])
    rows = []
    for n in range(1, depth + 1):
        mean, se = _mean_se(Y[:, n - 1])
        rows.append(Row("Y_mean", (float(n),), 1.0, mean, se, n, trials, verdict(_band(mean - 1.0, se, se_band))))
    for n in range(1, depth + 1):
        for i in range(law.dim):
            col = W[:, n - 1, i]
            rows.append(
                Row(f"weighted_mean[{i}]", (float(n),), float(oracle[n - 1, i]), _median(col), _iqr_half(col), n, trials, INFO)
            )
    return ExperimentReport("inhomogeneous", law.to_json(), rows)


# ---------------------------------------------------------------------------
# theory-only reports
# ---------------------------------------------------------------------------


def conjugate_report(law: ReproductionLaw, alpha_grid, legendre: dict | None = None) -> ExperimentReport:
    rows = [Row("conjugate", _grid(a), conj(law, _vec(a, law.dim), legendre)) for a in alpha_grid]
    return ExperimentReport("conjugate", law.to_json(), rows)


def spectrum_report(law: ReproductionLaw, alpha_grid, legendre: dict | None = None) -> ExperimentReport:
    rows = [Row("f", _grid(a), spectrum(law, _vec(a, law.dim), legendre)) for a in alpha_grid]
    if law.dim == 1:
        tol = float((legendre or {}).get("tol", 1e-9))
        I = level_set_I(law, tol=tol)
        rows.append(Row("I_lower", (), I.lower))
        rows.append(Row("I_upper", (), I.upper))
    return ExperimentReport("spectrum", law.to_json(), rows)


def classify_report(law: ReproductionLaw, direction=1.0) -> ExperimentReport:
    d = _vec(direction, law.dim)
    diag = classify_direction(law, d)
    nan = math.nan
    rows = [
        Row("q_c", _grid(d), nan if diag.q_c is None else diag.q_c),
        Row("slope", _grid(d), nan if diag.slope is None else diag.slope),
        Row("gap_at_qc", _grid(d), nan if diag.gap_at_qc is None else diag.gap_at_qc),
    ]
    rep = ExperimentReport("classify", law.to_json(), rows)
    rep.extra = {"kind": diag.kind}
    return rep


# ---------------------------------------------------------------------------
# exact-oracle self test (no Monte Carlo)
# ---------------------------------------------------------------------------


def selftest() -> ExperimentReport:
    """Closed-form checks that run in a few seconds and use no randomness
    beyond the deterministic +-1 tree."""
    from .laws import DegenerateAnalytic, GaussianIid, HeavyTilt, OffspringLaw, normalize_for_mandelbrot

    gauss = GaussianIid(1, offspring_law=OffspringLaw.constant(2), mean=(0.0,), variances=(1.0,))
    pm1 = DiscreteFinite.from_atoms([(1.0, [[1.0], [-1.0]])], 1)
    log2 = math.log(2.0)
    qc = math.sqrt(2 * log2)
    rows: list[Row] = []

    def check(name, grid, theory, emp, tol):
        rows.append(Row(name, grid, theory, emp, 0.0, 0, 0, verdict(abs(emp - theory) <= tol)))

    for a in np.round(np.arange(-1.1, 1.1 + 1e-9, 0.1), 10):
        check("gaussian_conjugate", (float(a),), log2 - a * a / 2, conj(gauss, a), 1e-6)
    hp = hat_P(gauss, 2.0)
    check("gaussian_hat_P", (2.0,), 2 * qc, hp.value, 1e-6)
    check("gaussian_theta_star", (2.0,), qc / 2, hp.theta, 1e-5)
    I = level_set_I(gauss)
    check("gaussian_I_lower", (), -qc, I.lower, 1e-6)
    check("gaussian_I_upper", (), qc, I.upper, 1e-6)

    d = classify_direction(gauss)
    check("classify_gaussian_second_order", (), qc, d.q_c if d.kind == "SecondOrder" else math.nan, 1e-6)
    heavy = normalize_for_mandelbrot(HeavyTilt(1)).law
    d = classify_direction(heavy)
    ok = d.kind == "FirstOrder" and d.q_c == 1.0 and d.gap_at_qc > 0
    rows.append(Row("classify_heavy_first_order", (), 1.0, d.q_c if d.q_c is not None else math.nan, 0.0, 0, 0, verdict(ok)))
    d = classify_direction(DegenerateAnalytic(1, mean_offspring_value=2.0))
    rows.append(Row("classify_degenerate", (), 1.0, float(d.kind == "Degenerate"), 0.0, 0, 0, verdict(d.kind == "Degenerate")))
    check("heavy_moment_at_one", (1.0,), math.log(2 * 1.5), HeavyTilt(1).cumulant(1.0), 1e-9)

    front = grow(pm1, 20, krng.CounterRNG(0))
    for q in np.round(np.arange(-1.0, 1.0 + 1e-9, 0.25), 10):
        check("pm1_free_energy", (float(q),), math.log(2 * math.cosh(q)), partition_function(front, q)[1], 1e-12)
    check("pm1_ldp_count", (0.0,), math.log(math.comb(20, 10)) / 20, ldp_count(front, 0.0, 0.05), 0.0)

    dev = biconjugate_check(gauss, np.linspace(-1.5, 1.5, 7))
    rows.append(Row("gaussian_biconjugate", (), 0.0, dev, 0.0, 0, 0, verdict(dev <= 1e-4)))
    dev = biconjugate_check(pm1, np.linspace(-1.0, 1.0, 5))
    rows.append(Row("pm1_biconjugate", (), 0.0, dev, 0.0, 0, 0, verdict(dev <= 1e-4)))
    return ExperimentReport("selftest", {"family": "builtin"}, rows)


__all__ = [
    "BOUNDARY",
    "EMPTY",
    "FAIL",
    "PASS",
    "THEORY",
    "binomial_restricted",
    "classify_report",
    "conjugate_report",
    "dimension_report",
    "free_energy_curve",
    "inhomogeneous_report",
    "is_plus_minus_one",
    "ldp_spectrum",
    "load_defaults",
    "mandelbrot_lq_spectrum",
    "martingale_report",
    "measure_dimension_check",
    "run_trials",
    "selftest",
    "spectrum_report",
    "subtree_report",
]
