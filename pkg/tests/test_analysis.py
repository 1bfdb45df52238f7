import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from renewalgf import analysis as an
from renewalgf.errors import DomainError, PoleError, PreconditionError, TailOverlapError
from renewalgf.seqcore import CoefficientSequence

from conftest import sequences

ATOM = CoefficientSequence(((1, 1.0),))
HALF = CoefficientSequence(((1, 0.5), (2, 0.5)))


# quadrature ---------------------------------------------------------------

def test_gk_smooth_and_singular():
    q = an.gauss_kronrod(np.sin, 0.0, math.pi, rtol=1e-12)
    assert q.converged and abs(q.value - 2.0) < 1e-12
    q = an.gauss_kronrod(lambda x: x ** -0.5, 0.0, 1.0, rtol=1e-6)
    assert q.converged
    assert abs(q.value - 2.0) <= q.error <= 2e-6
    q = an.gauss_kronrod(lambda x: np.log(x), 0.0, 1.0, rtol=1e-10)
    assert abs(q.value + 1.0) < 1e-9


def test_gk_non_finite():
    with pytest.raises(PoleError):
        an.gauss_kronrod(lambda x: np.where(x > 0.5, np.inf, 1.0), 0.0, 1.0)


# measures ------------------------------------------------------------------

@pytest.mark.parametrize("eps", [1e-1, 1e-2, 1e-3])
def test_superlevel_cos(eps):
    cm, rep = an.superlevel_measure(ATOM, eps, 10**5)
    exact = 2 * math.acos(1 - eps)
    assert cm.lower <= exact <= cm.upper
    assert rep.satisfied


def test_sublevel_atom():
    # |1 - e^{i theta}| = 2|sin(theta/2)|
    for cm, eps in zip(an.sublevel_measure(ATOM, [0.1, 0.5], 10**5), [0.1, 0.5]):
        exact = 4 * math.asin(eps / 2)
        assert cm.lower <= exact <= cm.upper


def test_measure_domain():
    with pytest.raises(DomainError):
        an.superlevel_measure(ATOM, 0.0)
    with pytest.raises(DomainError):
        an.superlevel_measure(ATOM, 0.1, grid=10)


@settings(max_examples=25, deadline=None)
@given(sequences(max_support=30), st.sampled_from([1e-1, 1e-2, 1e-3, 1e-4]))
def test_superlevel_bound_random(f, eps):
    _, rep = an.superlevel_measure(f, eps, 20_000)
    assert rep.satisfied


def test_interval_mass_single():
    # E = [-t, t]: eps = 2t - 2 sin t
    t = 0.3
    reps = an.interval_mass_bound_check([(-t, t)])
    assert [r.theorem_tag for r in reps] == ["cos-interval-mass", "cos-interval-mass-sharp"]
    assert reps[0].meta["eps"] == pytest.approx(2 * t - 2 * math.sin(t), rel=1e-12)
    assert all(r.satisfied for r in reps)


def test_interval_mass_overlap():
    with pytest.raises(DomainError):
        an.interval_mass_bound_check([(0, 1), (0.5, 2)])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-math.pi, math.pi), min_size=2, max_size=10),
       st.floats(1.0, 5.0), st.floats(-3.0, 3.0))
def test_interval_mass_random(points, alpha, beta):
    pts = sorted(points)
    E = [(a, b) for a, b in zip(pts[::2], pts[1::2])]
    for r in an.interval_mass_bound_check(E, alpha, beta):
        assert r.satisfied


def test_tail_sublevel():
    reps = an.sublevel_tail_check({1: 0.5}, 0.5, [0.01, 0.1])
    assert all(r.satisfied for r in reps)
    with pytest.raises(PreconditionError):
        an.sublevel_tail_check({4: 0.5}, 0.5, [0.1])


def test_layer_cake_closed_form():
    n = 100_000
    h = 0.75 / n
    s = 0.25 + h * (np.arange(n) + 0.5)
    rep = an.layer_cake_check(s, h, 0.25, 1.0, 1.0, 0.0, 1.0)
    assert rep.lhs == pytest.approx(math.log(4), rel=1e-8)
    assert rep.rhs == pytest.approx(4.75)
    assert rep.satisfied


def test_layer_cake_hypothesis_violation():
    rep = an.layer_cake_check(np.full(100, 0.3), 0.1, 0.25, 1.0, 0.1, 0.0, 1.0)
    assert not rep.satisfied and rep.meta["hypothesis"] == "violated"


# dyadic L^p ----------------------------------------------------------------

def _atom_integral(p, t0):
    with mpmath.workdps(30):
        return float(mpmath.quad(lambda t: (t / (2 * mpmath.sin(t / 2))) ** p, [t0, 2 * t0]))


@pytest.mark.parametrize("p,t0", [(1, 0.25), (2, 0.125), (3, 2.0 ** -10)])
def test_dyadic_lp_atom_oracle(p, t0):
    rep = an.dyadic_lp_integral(ATOM, p, t0, rtol=1e-10)
    assert rep.integral == pytest.approx(_atom_integral(p, t0), rel=1e-9)
    assert rep.rhs == pytest.approx(an.cp_constant(p) * t0)
    assert rep.satisfied


def test_cp_constant():
    assert an.cp_constant(1) == 768
    assert an.cp_constant(2) == 6 * 2 ** 16


def test_periodic_pole_detected():
    from renewalgf.seqcore import ExpPolynomial
    with pytest.raises(PoleError):
        an._check_poles(ExpPolynomial.from_pairs({2: 0.5, 4: 0.5}), 3.0, 3.5)
    an._check_poles(ExpPolynomial.from_pairs({2: 0.5, 3: 0.5}), 3.0, 3.5)


def test_dyadic_lp_tail_overlap():
    f = an.log_power_family(0.0, 64)
    with pytest.raises(TailOverlapError):
        an.dyadic_lp_integral(f, 1, 2.0 ** -10)


@settings(max_examples=15, deadline=None)
@given(sequences(max_support=12), st.sampled_from([1.0, 2.0, 3.0]), st.integers(2, 12))
def test_dyadic_lp_random(f, p, j):
    rep = an.dyadic_lp_integral(f, p, 2.0 ** -j)
    assert rep.satisfied
    assert rep.error <= 1e-6 * rep.integral


# series criteria -----------------------------------------------------------

def test_log_family_normalised():
    f = an.log_power_family(0.0, 256)
    head = math.fsum(a for _, a in f.entries)
    assert head + f.tail_mass == pytest.approx(1.0, abs=1e-14)
    assert f.entries[0][1] == pytest.approx(6 / math.pi ** 2, rel=1e-14)
    # tail of 1/k^2 beyond 256 is about 1/256.5
    assert f.tail_mass == pytest.approx(6 / math.pi ** 2 / 256.5, rel=1e-5)


def test_moment_arrays_half():
    r, W, U = an.moment_arrays(HALF, 3)
    assert r.tolist() == [0.5, 0.0, 0.0]
    assert W.tolist() == [0.5, 1.5, 1.5]
    assert U.tolist() == [0.5, 2.5, 2.5]


def test_classify_growth():
    js = list(range(1, 12))
    assert an.classify_growth(js, [1.0] * 11)["verdict"] == "diverging"
    assert an.classify_growth(js, [2.0 ** -j for j in js])["verdict"] == "converging"
    assert an.classify_growth(js, [0.0] * 11)["verdict"] == "converging"
    assert an.classify_growth(js[:3], [1.0] * 3)["verdict"] == "inconclusive"


def test_l1_half_diverges():
    rep = an.l1_two_sided(HALF, 1, 4096)
    assert rep.meta["lower_verdict"] == "diverging"
    assert rep.meta["integral_verdict"] == "diverging"
    assert rep.satisfied


# condensation --------------------------------------------------------------

def test_condensation_worked_instance():
    lo, up = an.dyadic_block_compare(lambda n: Fraction(1, n * n), 1, 2, 20)
    assert lo.lhs == pytest.approx(0.142, abs=1e-3)
    assert lo.rhs == pytest.approx(0.5, abs=1e-3)
    assert up.rhs == pytest.approx(1.580, abs=1e-3)
    assert lo.satisfied and up.satisfied


def test_condensation_rejects_increasing():
    with pytest.raises(DomainError):
        an.dyadic_block_compare(lambda n: Fraction(n), 1, 2, 10)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 4), st.sampled_from([0, 0.5, 1, 2]), st.integers(1, 3))
def test_condensation_powers(power, alpha, m):
    reps = an.dyadic_block_compare(lambda n: Fraction(1, n ** power), alpha, m, 8)
    assert all(r.satisfied for r in reps)


# L^p membership --------------------------------------------------------------

def test_l2_certificate_atom():
    with mpmath.workdps(30):
        want = float(2 * mpmath.quad(lambda t: t ** 2 / (4 * mpmath.sin(t / 2) ** 2), [0, 1]))
    rep = an.l2_certificate(ATOM)
    assert rep.lhs == pytest.approx(want, rel=1e-9)
    assert rep.rhs == pytest.approx(math.pi ** 3)


def test_lp_criteria_tags():
    tags = [r.theorem_tag for r in an.lp_criteria(HALF, nu=0.5, p=3, N=1024)]
    assert tags == ["lp-series-criterion", "lp-threshold", "l2-certificate"]


def test_epsilon_set_cos():
    reps = an.epsilon_set_bound(ATOM, 0.5, 0.25, [0.1, 0.01], grid=20_000)
    assert all(r.satisfied for r in reps)
    with pytest.raises(PreconditionError):
        an.epsilon_set_bound({2: 1.0}, 0.5, 0.25, [0.1])
