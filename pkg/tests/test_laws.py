import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from brwspectra import rng as krng
from brwspectra.errors import (
    ConfigError,
    DegenerateLaw,
    NoSampler,
    NotNormalizable,
    OutsideDomain,
    SubcriticalTruncation,
)
from brwspectra.laws import (
    DiscreteFinite,
    GaussianIid,
    HeavyTilt,
    OffspringLaw,
    cumulant,
    cumulant_grad,
    finite_difference_grad,
    heavy_density,
    heavy_tail,
    law_from_json,
    normalize_for_mandelbrot,
    sample_reproduction,
    truncated_cumulant,
    truncated_extinction_probability,
)

from conftest import LOG2, make_gauss, make_pm1


# -- sampling ---------------------------------------------------------------


def test_gaussian_sampler_is_centred(gauss):
    keys = krng.mix64(np.arange(50_000, dtype=np.uint64))
    fam = gauss.offspring(keys)
    assert np.all(fam.counts == 2)
    assert fam.increments.shape == (100_000, 1)
    assert abs(fam.increments.mean()) < 0.02


def test_point_mass_sampler_is_deterministic(pm1):
    g = krng.CounterRNG(1).generator()
    for _ in range(5):
        n, inc = sample_reproduction(pm1, g)
        assert n == 2 and inc[:, 0].tolist() == [1.0, -1.0]


def test_percolation_increment_mean(percolation):
    keys = krng.mix64(np.arange(50_000, dtype=np.uint64))
    fam = percolation.offspring(keys)
    assert abs(fam.increments.mean() - 0.5) < 0.01


def test_heavy_sampler_matches_tail(heavy):
    keys = krng.mix64(np.arange(20_000, dtype=np.uint64))
    w = heavy.offspring(keys).increments[:, 0]
    cdf = lambda x: 1 - heavy_tail(np.maximum(x, 0))
    assert stats.kstest(w, cdf).pvalue > 1e-3


def test_analytic_family_has_no_sampler(beta_stable):
    with pytest.raises(NoSampler):
        sample_reproduction(beta_stable, krng.CounterRNG(0).generator())


def test_sampler_oracle_consistency(random_discrete):
    keys = krng.mix64(np.arange(100_000, dtype=np.uint64) + 5)
    fam = random_discrete.offspring(keys)
    q = np.array([0.4, -0.3])
    owner = np.repeat(np.arange(keys.size), fam.counts)
    s = np.bincount(owner, weights=np.exp(fam.increments @ q))
    est, se = s.mean(), s.std(ddof=1) / math.sqrt(s.size)
    target = math.exp(random_discrete.cumulant(q))
    assert abs(est - target) <= 4 * se


# -- cumulant ---------------------------------------------------------------


@pytest.mark.parametrize("q", [-2.0, -0.3, 0.0, 0.7, 3.0])
def test_gaussian_cumulant_closed_form(gauss, q):
    assert cumulant(gauss, q) == pytest.approx(LOG2 + q * q / 2, abs=1e-14)


@pytest.mark.parametrize("name", ["gauss", "pm1", "heavy", "percolation", "random_discrete", "beta_stable"])
def test_cumulant_at_zero_is_log_mean_offspring(request, name):
    law = request.getfixturevalue(name)
    assert law.cumulant(np.zeros(law.dim)) == pytest.approx(math.log(law.mean_offspring), abs=1e-12)


def test_point_mass_cumulant(pm1):
    assert cumulant(pm1, 1.0) == pytest.approx(math.log(math.e + 1 / math.e), abs=1e-15)


def test_heavy_outside_domain(heavy):
    assert cumulant(heavy, 1.5) == math.inf
    assert math.isfinite(cumulant(heavy, 1.0))
    with pytest.raises(OutsideDomain):
        cumulant_grad(heavy, 1.5)


@pytest.mark.parametrize("q", [-2.0, -0.5, 0.3, 0.8, 1.0])
def test_heavy_moment_against_tail_integral(heavy, q):
    # E e^{qW} = 1 + q * int_0^inf e^{qx} P(W > x) dx, an integrand unrelated to
    # the density used by the implementation
    val, _ = integrate.quad(lambda x: math.exp((q - 1) * x) * (1 + x) ** -3, 0, math.inf, epsabs=1e-13)
    assert heavy.cumulant(q) == pytest.approx(LOG2 + math.log1p(q * val), abs=1e-9)


def test_heavy_moment_exact_at_one(heavy):
    assert heavy.cumulant(1.0) == pytest.approx(math.log(2 * 1.5), abs=1e-10)


def test_heavy_density_integrates_to_one():
    val, _ = integrate.quad(lambda x: float(heavy_density(x)), 0, math.inf)
    assert val == pytest.approx(1.0, abs=1e-10)


def test_beta_stable_cumulant(beta_stable):
    assert beta_stable.cumulant(4.0) == pytest.approx(LOG2 - 2.0)
    assert beta_stable.cumulant(-0.1) == math.inf


# -- gradient ---------------------------------------------------------------


def test_gaussian_gradient(gauss):
    assert cumulant_grad(gauss, 1.0)[0] == pytest.approx(1.0, abs=1e-14)


def test_gradient_at_zero_is_alpha0(random_discrete):
    num = sum(p * np.sum(inc, axis=0) for p, inc in
              [(p, np.array(inc)) for p, inc in random_discrete.atoms])
    alpha0 = num / random_discrete.mean_offspring
    assert np.allclose(random_discrete.grad([0.0, 0.0]), alpha0, atol=1e-14)
    assert make_pm1().grad(0.0)[0] == 0.0


@pytest.mark.parametrize(
    "name,q",
    [("gauss", 0.4), ("pm1", -1.2), ("heavy", 0.5), ("heavy", -1.0), ("percolation", 2.0), ("random_discrete", [0.3, -0.2])],
)
def test_gradient_matches_finite_differences(request, name, q):
    law = request.getfixturevalue(name)
    q = np.atleast_1d(np.asarray(q, dtype=float))
    g = law.grad(q)
    fd = finite_difference_grad(law.cumulant, q)
    assert np.allclose(g, fd, rtol=1e-5, atol=1e-7)


def test_finite_difference_stencil_outside_domain(heavy):
    with pytest.raises(OutsideDomain):
        finite_difference_grad(heavy.cumulant, np.array([1.0]))


# -- convexity property -----------------------------------------------------

qs = st.floats(-3, 3, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(qs, qs, st.floats(0.01, 0.99))
def test_cumulant_convex_gaussian_and_pm1(a, b, t):
    for law in (make_gauss(), make_pm1()):
        mid = law.cumulant(t * a + (1 - t) * b)
        assert mid <= t * law.cumulant(a) + (1 - t) * law.cumulant(b) + 1e-8


@settings(max_examples=25, deadline=None)
@given(st.floats(-3, 1), st.floats(-3, 1), st.floats(0.01, 0.99))
def test_cumulant_convex_heavy(a, b, t):
    law = HeavyTilt(1)
    mid = law.cumulant(t * a + (1 - t) * b)
    assert mid <= t * law.cumulant(a) + (1 - t) * law.cumulant(b) + 1e-8


# -- truncation -------------------------------------------------------------


def test_truncation_inactive_equals_cumulant(random_discrete):
    q = np.array([0.5, -0.7])
    assert truncated_cumulant(random_discrete, q, 10) == pytest.approx(random_discrete.cumulant(q), abs=1e-13)


def test_truncation_is_monotone_in_A(random_discrete):
    for q in ([0.0, 0.0], [1.0, -0.5], [-2.0, 0.3]):
        vals = [truncated_cumulant(random_discrete, q, A) for A in (2, 2.3, 3, 5)]
        assert all(x <= y + 1e-15 for x, y in zip(vals, vals[1:]))
        assert vals[-1] == pytest.approx(random_discrete.cumulant(q), abs=1e-13)


def test_subcritical_truncation(random_discrete):
    with pytest.raises(SubcriticalTruncation):
        truncated_cumulant(random_discrete, [0.0, 0.0], 0.5)


def test_truncated_extinction_probability_vanishes():
    law = DiscreteFinite.from_atoms([(0.5, [[-3.5], [-3.5]]), (0.5, [[1.0], [1.0], [1.0], [1.0]])])
    # A=1: N_A in {0, 1}, subcritical; A=3: N_A in {0, 3}, s = (1 + s^3)/2;
    # A=4: N_A >= 2 always
    probs = [truncated_extinction_probability(law, A) for A in (1.0, 3.0, 4.0)]
    assert probs[0] == pytest.approx(1.0, abs=1e-6)
    assert probs[1] == pytest.approx((math.sqrt(5) - 1) / 2, abs=1e-10)
    assert probs[2] == 0.0


def test_gaussian_truncated_closed_form_d1(gauss):
    q = 0.8
    for A, kids in ((1.5, 1), (2.0, 2), (3.7, 2)):
        val, _ = integrate.quad(lambda x: math.exp(q * x) * stats.norm.pdf(x), -A, A)
        assert gauss.truncated(q, A)[0] == pytest.approx(math.log(kids) + math.log(val), abs=1e-10)
    assert truncated_cumulant(gauss, q, math.inf) == gauss.cumulant(q)


def test_gaussian_truncated_monte_carlo_d2():
    law = GaussianIid(2, offspring_law=OffspringLaw.constant(3), mean=(0.0, 0.0), variances=(1.0, 1.0))
    q, A = np.array([0.3, -0.2]), 2.0
    val, se = truncated_cumulant(law, q, A, with_stderr=True)
    # independent oracle: polar integral of the truncated radial density
    r_int, _ = integrate.dblquad(
        lambda y, x: math.exp(q @ [x, y]) * stats.norm.pdf(x) * stats.norm.pdf(y),
        -A, A, lambda x: -math.sqrt(A * A - x * x), lambda x: math.sqrt(A * A - x * x),
    )
    assert se > 0
    assert abs(val - (math.log(2) + math.log(r_int))) <= 4 * se + 1e-12


def test_heavy_truncated_converges(heavy):
    vals = [truncated_cumulant(heavy, 0.5, A) for A in (2, 5, 20, 60)]
    assert all(a <= b + 1e-12 for a, b in zip(vals, vals[1:]))
    assert vals[-1] == pytest.approx(heavy.cumulant(0.5), abs=1e-9)


# -- normalization ----------------------------------------------------------


def test_normalize_gaussian(gauss):
    n = normalize_for_mandelbrot(gauss)
    assert n.shift == pytest.approx(-(LOG2 + 0.5))
    assert n.law.cumulant(1.0) == pytest.approx(0.0, abs=1e-14)
    assert n.slope_at_one == pytest.approx(1 - LOG2 - 0.5, abs=1e-12)
    assert n.nondegenerate


def test_normalize_is_idempotent(gauss):
    once = normalize_for_mandelbrot(gauss).law
    twice = normalize_for_mandelbrot(once)
    assert abs(twice.shift) < 1e-14


def test_normalize_heavy(heavy):
    n = normalize_for_mandelbrot(heavy)
    assert n.law.cumulant(1.0) == pytest.approx(0.0, abs=1e-12)
    assert n.law.cumulant(1.0 + 1e-9) == math.inf
    assert n.nondegenerate


def test_normalize_rejects_infinite(degenerate):
    with pytest.raises(NotNormalizable):
        normalize_for_mandelbrot(degenerate)


# -- validation and serialization ------------------------------------------


def test_validation_errors():
    with pytest.raises(ConfigError):
        DiscreteFinite.from_atoms([(0.6, [[1.0], [-1.0]]), (0.5, [[0.0], [1.0]])])
    with pytest.raises(ConfigError):
        DiscreteFinite.from_atoms([(1.0, [[1.0]])])  # subcritical
    with pytest.raises(DegenerateLaw):
        DiscreteFinite.from_atoms([(1.0, [[1.0, 1.0], [2.0, 2.0]])])
    with pytest.raises(ConfigError):
        OffspringLaw((0, 2), (0.5, 0.5))
    with pytest.raises(ConfigError):
        law_from_json({"family": "nope"})


@pytest.mark.parametrize("name", ["gauss", "pm1", "heavy_normalized", "percolation", "random_discrete", "beta_stable", "degenerate"])
def test_json_round_trip(request, name):
    law = request.getfixturevalue(name)
    back = law_from_json(law.to_json())
    assert back == law
    q = np.full(law.dim, 0.3)
    assert back.cumulant(q) == law.cumulant(q)


def test_family_name_spellings():
    a = law_from_json({"family": "GaussianIid", "dim": 1, "params": {}})
    b = law_from_json({"family": "gaussian_iid", "dim": 1})
    assert a == b
