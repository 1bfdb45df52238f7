import cmath
import math

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from renewalgf import construct as cs
from renewalgf import pfunc as pf
from renewalgf.errors import DomainError, SubsequenceNotFound

EXT = cs.ConstructionConfig(cs.Precision.parse("extended:4096"))


def test_bernstein_record_and_validation():
    phi = pf.DiscreteBernstein(0.5, ((1.0, 2.0), (3.0, 0.25)))
    assert phi.total_mass == 2.25
    assert phi.first_moment == 2.75
    assert pf.DiscreteBernstein.from_record(phi.to_record()) == phi
    with pytest.raises(DomainError):
        pf.DiscreteBernstein(-1.0)
    with pytest.raises(DomainError):
        pf.DiscreteBernstein(0.0, ((0.0, 1.0),))


def test_bernstein_values():
    phi = pf.DiscreteBernstein(0.0, ((1.0, 1.0),))
    assert pf.bernstein_eval(phi, 0) == 0
    assert pf.bernstein_eval(phi, 1).real == pytest.approx(2 - math.exp(-1), rel=1e-15)
    # phi(z)/z -> 1 + first moment
    z = 1e-9
    assert (pf.bernstein_eval(phi, z) / z).real == pytest.approx(2.0, rel=1e-8)
    with pytest.raises(DomainError):
        pf.bernstein_eval(phi, -1)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 5), st.floats(-10, 10))
def test_one_minus_exp(x, y):
    w = complex(x, y)
    assert abs(pf._one_minus_exp(w) - (1 - cmath.exp(-w))) <= 1e-14


def test_probe_atom_limit():
    vals = pf.vanishing_ratio_probe({1: 1.0}, [1.0, 1e-2, 1e-4])
    assert abs(vals[-1] - 0.5) < 1e-4
    # closed form at theta = pi: 1 - f = 2
    v = pf.vanishing_ratio_probe({1: 1.0}, [math.pi])[0]
    assert v == pytest.approx(1j * math.pi / (1j * math.pi - 2), rel=1e-14)


def test_probe_ordering():
    with pytest.raises(DomainError):
        pf.vanishing_ratio_probe({1: 1.0}, [0.1, 0.2])
    with pytest.raises(DomainError):
        pf.vanishing_ratio_probe({1: 1.0}, [0.0])


def test_bernstein_from_series():
    nu = pf.bernstein_from_series({1: 0.5, 3: 0.5})
    assert nu.atoms == ((1, 0.5), (3, 0.5))
    z = 0.7 + 0.2j
    want = sum(a * (1 - cmath.exp(-k * z)) for k, a in nu.atoms)
    assert pf.bernstein_eval(nu, z) - z == pytest.approx(want, rel=1e-14)


def test_hww_budget():
    beta = lambda t: mpmath.mpf(t) ** -0.5
    nu, reports, trace = pf.hww_construct(beta, 0.5, 2, EXT)
    budget = reports[0]
    assert budget.theorem_tag == "weighted-moment-budget" and budget.satisfied
    assert len(nu.atoms) == len(trace.stages) + 1
    assert reports[1].theorem_tag == "vanishing-ratio-probe"


def test_hww_constant_beta():
    with pytest.raises(SubsequenceNotFound):
        pf.hww_construct(lambda t: mpmath.mpf(1), 0.5, 2, EXT)
