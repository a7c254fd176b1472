import math
from dataclasses import dataclass

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from brwspectra.errors import DomainMiss, EverywhereInfinite
from brwspectra.laws import DiscreteFinite, GaussianIid, OffspringLaw, ReproductionLaw
from brwspectra.legendre import (
    ConjugateQuery,
    biconjugate_check,
    classify_direction,
    conjugate,
    conjugate_value,
    gap,
    hat_P,
    level_set_I,
    spectrum_f,
)

from conftest import LOG2, Q_C, make_gauss, make_pm1


def binary_entropy_rate(a):
    """Conjugate of log(2 cosh q): log 2 - H-type entropy of the +-1 walk."""
    if abs(a) == 1:
        return 0.0
    return LOG2 - ((1 + a) / 2 * math.log1p(a) + (1 - a) / 2 * math.log1p(-a))


# -- conjugate ----------------------------------------------------------------


def test_gaussian_conjugate_closed_form(gauss):
    for a in np.linspace(-1, 1, 21):
        assert conjugate_value(gauss, a) == pytest.approx(LOG2 - a * a / 2, abs=1e-6)


@pytest.mark.parametrize("a", [-0.9, -0.5, 0.0, 0.3, 0.99])
def test_pm1_conjugate_entropy(pm1, a):
    assert conjugate_value(pm1, a) == pytest.approx(binary_entropy_rate(a), abs=1e-6)


def test_pm1_conjugate_outside_range(pm1):
    res = conjugate(pm1, ConjugateQuery(alpha=1.5))
    assert res.value == -math.inf and res.status == "minus_infinity"


def test_beta_stable_conjugate(beta_stable):
    # closed form on the negative half line with |alpha|, -inf on alpha >= 0
    c, beta = 1.0, 0.5
    for a in (-0.2, -0.5, -1.0, -3.0):
        exact = LOG2 - c * (1 - beta) * (c * beta) ** (beta / (1 - beta)) * abs(a) ** (beta / (beta - 1))
        assert conjugate_value(beta_stable, a) == pytest.approx(exact, abs=1e-6)
    assert conjugate_value(beta_stable, 0.5) == -math.inf


def test_conjugate_at_alpha0(random_discrete, heavy):
    for law in (random_discrete, heavy):
        a0 = law.grad(np.zeros(law.dim))
        assert conjugate_value(law, a0) == pytest.approx(math.log(law.mean_offspring), abs=1e-6)


def test_conjugate_2d_separable():
    law = GaussianIid(2, offspring_law=OffspringLaw.constant(3), mean=(0.5, -1.0), variances=(1.0, 2.0))
    a = np.array([0.2, 0.4])
    exact = math.log(3) - (a[0] - 0.5) ** 2 / 2 - (a[1] + 1.0) ** 2 / 4
    assert conjugate_value(law, a) == pytest.approx(exact, abs=1e-6)


def test_query_validation():
    with pytest.raises(ValueError):
        ConjugateQuery(alpha=0.0, grid_points=8)
    with pytest.raises(ValueError):
        ConjugateQuery(alpha=0.0, refine_iters=5)
    with pytest.raises(ValueError):
        ConjugateQuery(alpha=0.0, search_box=((1.0, 1.0),))


def test_domain_miss(degenerate):
    # the grid never hits the single finite point q = 0 when it is off-grid
    q = ConjugateQuery(alpha=0.0, search_box=((0.5, 3.0),))
    with pytest.raises(DomainMiss):
        conjugate(degenerate, q, max_expansions=0)


@settings(max_examples=30, deadline=None)
@given(st.floats(-1.1, 1.1), st.floats(-1.1, 1.1))
def test_conjugate_concave_on_segments(a, b):
    law = make_gauss()
    mid = conjugate_value(law, (a + b) / 2)
    assert mid >= (conjugate_value(law, a) + conjugate_value(law, b)) / 2 - 1e-6


# -- duality ------------------------------------------------------------------


def test_biconjugate_gaussian(gauss):
    assert biconjugate_check(gauss, [-1, -0.5, 0, 0.5, 1]) <= 1e-4


def test_biconjugate_pm1(pm1):
    assert biconjugate_check(pm1, np.linspace(-2, 2, 5)) <= 1e-4


def test_biconjugate_at_zero_exact(gauss):
    assert biconjugate_check(gauss, [0.0]) <= 1e-9


# -- level set and spectrum ------------------------------------------------


def test_level_set_gaussian(gauss):
    I = level_set_I(gauss)
    assert I.lower == pytest.approx(-Q_C, abs=1e-6)
    assert I.upper == pytest.approx(Q_C, abs=1e-6)
    assert I.contains(0.0) and not I.contains(1.2)


def test_level_set_pm1(pm1):
    I = level_set_I(pm1)
    # the entropy rate never reaches 0 inside (-1, 1): I is the full range
    assert I.lower == pytest.approx(-1.0, abs=1e-6)
    assert I.upper == pytest.approx(1.0, abs=1e-6)
    assert binary_entropy_rate(I.upper) == pytest.approx(0.0, abs=1e-6)


def test_level_set_asymmetric_triple():
    # cumulant log(e^q + 2e^-q): conj(-1) = log 2, conj(1) = 0 (approached as q -> inf)
    law = DiscreteFinite.from_atoms([(1.0, [[1.0], [-1.0], [-1.0]])])
    I = level_set_I(law)
    assert I.lower == pytest.approx(-1.0, abs=1e-6)
    assert I.upper == pytest.approx(1.0, abs=1e-6)
    assert conjugate_value(law, -1.0) == pytest.approx(LOG2, abs=1e-6)
    assert conjugate_value(law, 1.0) == pytest.approx(0.0, abs=1e-6)


def test_level_set_unbounded(beta_stable):
    I = level_set_I(beta_stable)
    assert I.unbounded_lower and not I.unbounded_upper


@dataclass(frozen=True)
class TruncatedView(ReproductionLaw):
    """The truncated cumulant of ``base`` at level ``A`` seen as a law."""

    base: DiscreteFinite = None
    A: float = 1.0

    def _cumulant(self, q):
        return self.base.truncated(q, self.A)[0]

    @property
    def mean_offspring(self):
        return math.exp(self.base.truncated(np.zeros(1), self.A)[0])

    def ray_bound(self, direction):
        return math.inf, True


def test_truncated_level_set_inside_I():
    law = DiscreteFinite.from_atoms([(0.5, [[1.0], [-2.0]]), (0.5, [[0.5], [3.0], [-1.0]])])
    I = level_set_I(law)
    for A in (2.0, 3.0):
        IA = level_set_I(TruncatedView(1, base=law, A=A))
        assert I.lower - 1e-9 <= IA.lower < IA.upper <= I.upper + 1e-9
    full = level_set_I(TruncatedView(1, base=law, A=10.0))
    assert full.lower == pytest.approx(I.lower, abs=1e-9)
    assert full.upper == pytest.approx(I.upper, abs=1e-9)


def test_spectrum_values(gauss):
    assert spectrum_f(gauss, 0.0) == pytest.approx(LOG2, abs=1e-9)
    assert spectrum_f(gauss, 1.5) == -math.inf
    assert spectrum_f(gauss, Q_C) == pytest.approx(0.0, abs=1e-5)


# -- free energy and transitions ----------------------------------------------


def test_hat_P_past_transition(gauss):
    hp = hat_P(gauss, 2.0)
    assert hp.value == pytest.approx(2 * Q_C, abs=1e-6)
    assert hp.theta == pytest.approx(Q_C / 2, abs=1e-5)


def test_hat_P_inside(gauss):
    hp = hat_P(gauss, 0.5)
    assert hp.value == pytest.approx(LOG2 + 0.125, abs=1e-12)
    assert hp.theta == 1.0
    assert hat_P(gauss, 0.0) == (pytest.approx(LOG2), 1.0)


def test_hat_P_first_order(heavy_normalized):
    # the domain ends at 1 with a positive gap: linear branch through the origin
    for q in (1.5, 3.0):
        hp = hat_P(heavy_normalized, q)
        assert hp.theta == pytest.approx(1 / q, rel=1e-9)
        assert hp.value == pytest.approx(q * heavy_normalized.cumulant(1.0), abs=1e-9)


def test_hat_P_everywhere_infinite(degenerate):
    with pytest.raises(EverywhereInfinite):
        hat_P(degenerate, 1.0)


@settings(max_examples=40, deadline=None)
@given(st.floats(-4, 4))
def test_hat_P_below_cumulant(q):
    law = make_gauss()
    assert hat_P(law, q).value <= law.cumulant(q) + 1e-12


@pytest.mark.parametrize("q", [0.5, 1.0, 2.0, -3.0])
def test_hat_P_equals_sup_over_spectrum(gauss, q):
    I = level_set_I(gauss)
    alphas = np.linspace(I.lower, I.upper, 2001)
    sup = max(q * a + spectrum_f(gauss, a) for a in alphas[::50])
    # refine around the best coarse point with the closed form of f
    fine = max(q * a + (LOG2 - a * a / 2) for a in alphas)
    assert sup <= hat_P(gauss, q).value + 1e-9
    assert fine == pytest.approx(hat_P(gauss, q).value, abs=2e-4)


def test_classify_gaussian(gauss):
    d = classify_direction(gauss)
    assert d.kind == "SecondOrder"
    assert d.q_c == pytest.approx(Q_C, abs=1e-6)
    assert abs(gap(gauss, d.q_c)) < 1e-9


def test_classify_rescaling_invariant(gauss):
    assert classify_direction(gauss, 5.0).q_c == pytest.approx(classify_direction(gauss, 0.1).q_c, abs=1e-12)


def test_classify_heavy_first_order(heavy_normalized):
    d = classify_direction(heavy_normalized)
    assert d.kind == "FirstOrder"
    assert d.q_c == 1.0
    assert d.slope == pytest.approx(0.0, abs=1e-12)
    # conj(grad(1-)) > 0 by quadrature
    assert conjugate_value(heavy_normalized, heavy_normalized.grad(1.0)) > 0


def test_classify_degenerate(degenerate):
    assert classify_direction(degenerate).kind == "Degenerate"


def test_classify_no_transition():
    # increments bounded above by 0 with ties at the max: gap stays positive
    law = DiscreteFinite.from_atoms([(1.0, [[0.0], [0.0], [-1.0]])])
    assert classify_direction(law).kind == "NoTransition"
