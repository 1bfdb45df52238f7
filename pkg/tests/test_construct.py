import json
import math

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from renewalgf import construct as cs
from renewalgf.errors import DomainError, PreconditionError, PrecisionExhausted, SubsequenceNotFound
from renewalgf.phispec import parse_phi
from renewalgf.reports import to_json
from renewalgf.seqcore import ExpPolynomial, one_minus_eval

from conftest import sequences

EXT = cs.ConstructionConfig(cs.Precision.parse("extended:4096"))
PHI = parse_phi("theta^-0.25")


unit = st.floats(min_value=1e-6, max_value=1.0, allow_nan=False)


@settings(max_examples=300, deadline=None)
@given(unit, unit)
def test_croft_coefficient_bounds(lam, gam):
    d = cs.croft_coefficient(lam, gam)  # raises CertificationError on violation
    assert lam / (4 * gam) * (1 - 1e-12) <= d <= lam / gam * (1 + 1e-12)
    closed = cs.combination_modulus(lam, gam)
    assert abs(cs.combination_modulus(lam, gam, d) - closed) <= 1e-12
    assert closed <= lam * (gam + lam) / 2 * (1 + 1e-12)


def test_croft_coefficient_domain():
    with pytest.raises(DomainError):
        cs.croft_coefficient(0.0, 0.5)
    with pytest.raises(DomainError):
        cs.croft_coefficient(0.5, 1.5)


@settings(max_examples=100, deadline=None)
@given(sequences(max_support=20), st.floats(0.01, 1.0), st.floats(1e-3, 1.0))
def test_rotation_certificates(f, frac, gam):
    P = f.to_poly()
    theta0 = frac / P.degree
    d, Q = cs.attach_rotation(P, theta0, gam)
    assert Q.normalized
    for rep in cs.rotation_certificates(P, theta0, gam, d, Q):
        assert rep.satisfied, rep


def test_rotation_precondition():
    with pytest.raises(PreconditionError):
        cs.attach_rotation({1: 0.5, 4: 0.5}, 0.5, 0.5)


def test_certify_window_covers_truth():
    P = ExpPolynomial(((1, 1.0),))
    t, h = 0.3, 0.01
    c = cs.certify_window(P, t, h, samples=11)
    exact = 2 * math.sin((t + h) / 2)
    assert float(c.sampled_max) <= exact <= float(c.certified)
    # slack is L * spacing / 2 = 1e-3 plus roundoff
    assert float(c.certified) - exact <= 1.0001e-3


def test_precision_parse():
    assert str(cs.Precision.parse("binary64")) == "binary64"
    assert cs.Precision.parse("extended:256").bits == 256
    with pytest.raises(DomainError):
        cs.Precision.parse("quad")


def test_binary64_exhausts_with_partial_trace():
    with pytest.raises(PrecisionExhausted) as info:
        cs.iterative_counterexample({1: 1}, 0.5, 1.0, PHI, 0, 3)
    assert info.value.trace is not None
    assert info.value.trace.exhausted["stage"] == info.value.stage


@pytest.fixture(scope="module")
def rotation_trace():
    return cs.iterative_counterexample({1: 1}, 0.5, 1.0, PHI, 0, 2, EXT)


def test_iterative_trace_certifies(rotation_trace):
    assert len(rotation_trace.stages) == 2
    reports = cs.certify_trace(rotation_trace)
    assert reports and all(r.satisfied for r in reports), [r.theorem_tag for r in reports if not r.satisfied]
    ratios = cs.trace_ratios(rotation_trace)
    assert ratios[1] < ratios[0]


def test_trace_round_trip(rotation_trace):
    rec = json.loads(to_json(cs.trace_to_record(rotation_trace)))
    back = cs.trace_from_record(rec)
    a = [r.to_record() for r in cs.certify_trace(rotation_trace)]
    b = [r.to_record() for r in cs.certify_trace(back)]
    assert to_json(a) == to_json(b)


def test_malformed_trace():
    with pytest.raises(DomainError):
        cs.trace_from_record({"prec": 53})


def test_croft_engine_stages():
    tr = cs.iterative_counterexample({1: 1}, 0.5, 1.0, PHI, 0, 2, EXT, engine="croft")
    checks = cs.croft_stage_checks(tr.stages)
    assert all(r.satisfied for r in checks)
    assert all(isinstance(s.m, int) for s in tr.stages)


def test_spread_windows():
    stages = cs.power_weight_spread({1: 1}, PHI, 0, 2, EXT)
    for s in stages:
        assert s.certificate.certified <= s.window.bound
        assert s.m * s.theta <= 2 * mpmath.pi


def test_flat_points_respect_bound():
    beta = lambda k: 1 / (1 + mpmath.log(k))
    pts = cs.flat_point_sequence({1: 1}, beta, 3, EXT)
    for p in pts:
        assert p.ratio <= p.ratio_bound
        with mpmath.workprec(p.Q.prec):
            assert abs(one_minus_eval(p.Q, p.theta)) / p.theta == pytest.approx(float(p.ratio))
    assert [p.s for p in pts] == sorted({p.s for p in pts})


def test_constant_sequence_has_no_vanishing_subsequence():
    with pytest.raises(SubsequenceNotFound):
        cs.flat_point_sequence({1: 1}, lambda k: mpmath.mpf(1), 2, EXT)
