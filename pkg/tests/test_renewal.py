from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings

from renewalgf.errors import DomainError, PreconditionError
from renewalgf.renewal import (difference_diagnostics, efp_diagnostic, renewal_csv,
                               renewal_sequence, verify_gf_identity)
from renewalgf.seqcore import CoefficientSequence

from conftest import sequences

HALF = CoefficientSequence(((1, Fraction(1, 2)), (2, Fraction(1, 2))))


def test_half_half_closed_form():
    # 1/(1 - z/2 - z^2/2) = (2/3)/(1-z) + (1/3)/(1+z/2)
    b = renewal_sequence(HALF, 40)
    assert b.exact
    for n, v in enumerate(b.b):
        assert v == Fraction(2, 3) + Fraction(1, 3) * Fraction(-1, 2) ** n


def test_float_path_matches_closed_form():
    f = CoefficientSequence(((1, 0.5), (2, 0.5)))
    b = renewal_sequence(f, 200)
    assert not b.exact
    want = 2 / 3 + (-0.5) ** np.arange(201) / 3
    assert np.max(np.abs(np.array(b.b) - want)) < 1e-15


def test_single_atom():
    b = renewal_sequence(CoefficientSequence(((3, 1),)), 9)
    assert b.b == tuple(Fraction(1) if n % 3 == 0 else Fraction(0) for n in range(10))


def test_gf_identity_and_limit():
    b = renewal_sequence(HALF, 60)
    assert verify_gf_identity(HALF, b).lhs == 0
    rep = efp_diagnostic(HALF, b)
    assert rep.meta["limit"] == Fraction(2, 3)
    assert rep.lhs == Fraction(1, 3) / 2**60


def test_periodic_refused():
    f = CoefficientSequence(((2, 0.5), (4, 0.5)))
    with pytest.raises(PreconditionError):
        efp_diagnostic(f, renewal_sequence(f, 10))


def test_negative_horizon():
    with pytest.raises(DomainError):
        renewal_sequence(HALF, -1)


def test_differences_and_csv():
    b = renewal_sequence(HALF, 8)
    d = difference_diagnostics(b)
    # |b_{k+1} - b_k| = (1/2)^{k+1}
    assert d.abs_variation[-1] == pytest.approx(sum(0.5 ** (k + 1) for k in range(8)))
    text = renewal_csv(b)
    lines = text.strip().splitlines()
    assert lines[0] == "n,b_n,delta,abs_partial,sq_partial,hardy_partial"
    assert len(lines) == 10


@settings(max_examples=40, deadline=None)
@given(sequences(max_support=15, exact=True))
def test_exact_float_agree(f):
    ex = renewal_sequence(f, 60, exact=True)
    fl = renewal_sequence(CoefficientSequence(tuple((k, float(a)) for k, a in f.entries)), 60)
    assert max(abs(float(x) - y) for x, y in zip(ex.b, fl.b)) <= 1e-12
    assert all(0 <= float(x) <= 1 for x in ex.b)
