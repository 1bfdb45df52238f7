import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings

from renewalgf.errors import DomainError, TailOverlapError
from renewalgf.seqcore import (UNDEFINED_AT_ZERO, CoefficientSequence, ExpPolynomial, WeightSpec,
                               derivative_bound, eval as feval, from_record, is_aperiodic,
                               moment_functionals, one_minus_eval, reciprocal_ratio,
                               weighted_norm)

from conftest import sequences

HALF = CoefficientSequence(((1, 0.5), (2, 0.5)))


def test_rejects_bad_entries():
    with pytest.raises(DomainError):
        CoefficientSequence(((0, 1.0),))
    with pytest.raises(DomainError):
        CoefficientSequence(((1, -0.1), (2, 1.1)))
    with pytest.raises(DomainError):
        CoefficientSequence(((1, 0.5), (1, 0.5)))
    with pytest.raises(DomainError):
        CoefficientSequence(((1, 0.3),), normalized=True)
    with pytest.raises(DomainError):
        ExpPolynomial(((1.5, 1.0),), "integer")


def test_normalised_flag():
    assert HALF.normalized
    assert not CoefficientSequence(((1, 0.25),)).normalized
    assert CoefficientSequence(((1, 0.5),), tail_mass=0.5).normalized


def test_one_minus_matches_closed_form():
    th = np.linspace(-3, 3, 101)
    got = one_minus_eval({1: 1.0}, th)
    want = 1 - np.exp(1j * th)
    assert np.max(np.abs(got - want)) < 1e-15
    # small-theta accuracy where 1 - cos cancels
    v = one_minus_eval({1: 1.0}, 1e-9)
    assert abs(v.real - 5e-19) < 1e-30


def test_eval_dense_against_direct():
    f = CoefficientSequence.from_weights([1 / 64] * 64)
    th = np.array([0.1, 0.7, 2.0])
    want = np.array([sum(np.exp(1j * k * t) for k in range(1, 65)) / 64 for t in th])
    assert np.max(np.abs(feval(f, th) - want)) < 1e-13


def test_mp_path_agrees():
    with mpmath.workprec(200):
        a1, a5 = mpmath.mpf(1) / 3, mpmath.mpf(2) / 3
        p = ExpPolynomial(((1, a1), (5, a5)), prec=200)
        t = mpmath.mpf("1e-40")
        v = one_minus_eval(p, t)
        want = sum(a * mpmath.mpc(2 * mpmath.sin(k * t / 2) ** 2, -mpmath.sin(k * t))
                   for k, a in ((1, a1), (5, a5)))
        assert abs(v.real - want.real) < mpmath.mpf(10) ** -135
        assert abs(v.imag - want.imag) < mpmath.mpf(10) ** -95


def test_moment_functionals_half():
    mf = moment_functionals(HALF, 0.4)
    assert (mf.r, mf.W, mf.U) == (0, 1.5, 2.5)
    mf = moment_functionals(HALF, 0.6)
    assert (mf.r, mf.W, mf.U) == (0.5, 0.5, 0.5)


def test_tail_overlap():
    f = CoefficientSequence(((1, 0.5),), tail_mass=0.5)
    assert moment_functionals(f, 1.0).r == 0.5
    with pytest.raises(TailOverlapError):
        moment_functionals(f, 0.1)


def test_weighted_norm():
    assert weighted_norm({1: 0.5, 4: 0.5}, WeightSpec.power(0.5)) == pytest.approx(1.5)
    assert weighted_norm(HALF, WeightSpec.power(0)) == 1.0
    with pytest.raises(DomainError):
        WeightSpec.power(1.0)
    with pytest.raises(DomainError):
        WeightSpec.general(lambda k: 0.1 / k)(3)


def test_reciprocal_ratio():
    assert reciprocal_ratio(HALF, 0.0) is UNDEFINED_AT_ZERO
    assert abs(reciprocal_ratio({1: 1.0}, 1e-6)) == pytest.approx(1.0, rel=1e-9)
    arr = reciprocal_ratio(HALF, np.array([0.0, 0.5]))
    assert np.isnan(arr[0]) and np.isfinite(arr[1])


def test_aperiodic():
    assert is_aperiodic(HALF)
    assert not is_aperiodic({2: 0.5, 4: 0.5})
    assert is_aperiodic({2: 0.5, 3: 0.5})


def test_record_round_trip():
    f = CoefficientSequence(((1, Fraction(1, 3)), (7, Fraction(2, 3))))
    g = from_record(f.to_record())
    assert [float(a) for _, a in g.entries] == [1 / 3, 2 / 3]
    p = ExpPolynomial(((1, 0.25), (math.pi, 0.75)), "real")
    q = from_record(p.to_record())
    assert q.terms == p.terms


@settings(max_examples=60, deadline=None)
@given(sequences())
def test_one_minus_bounded_by_derivative(f):
    # |1 - f(theta)| <= theta * sum k a_k
    th = np.linspace(1e-4, 1.0, 50)
    lhs = np.abs(one_minus_eval(f, th))
    assert np.all(lhs <= th * float(derivative_bound(f)) * (1 + 1e-12) + 1e-15)


@settings(max_examples=60, deadline=None)
@given(sequences())
def test_conjugate_symmetry(f):
    th = np.linspace(0.1, 3.0, 20)
    assert np.allclose(one_minus_eval(f, -th), np.conj(one_minus_eval(f, th)), atol=1e-14)
