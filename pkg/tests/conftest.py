from fractions import Fraction

import numpy as np
import pytest
from hypothesis import strategies as st

from renewalgf.seqcore import CoefficientSequence


def random_sequence(rng, max_support=30, exact=False):
    """Normalised aperiodic sequence on a random subset of ``[1, max_support]``."""
    n = int(rng.integers(1, max_support + 1))
    ks = sorted(set(int(k) for k in rng.integers(1, max_support + 1, size=n)) | {1})
    if exact:
        raw = [int(v) for v in rng.integers(1, 100, size=len(ks))]
        tot = sum(raw)
        w = [Fraction(v, tot) for v in raw]
    else:
        raw = rng.random(len(ks)) + 1e-3
        w = (raw / raw.sum()).tolist()
        w[-1] = 1.0 - sum(w[:-1])
    return CoefficientSequence(tuple(zip(ks, w)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@st.composite
def sequences(draw, max_support=20, exact=False):
    ks = draw(st.lists(st.integers(1, max_support), min_size=1, max_size=8, unique=True))
    ks = sorted(set(ks) | {1})
    raw = draw(st.lists(st.integers(1, 50), min_size=len(ks), max_size=len(ks)))
    tot = sum(raw)
    w = [Fraction(v, tot) for v in raw]
    if not exact:
        w = [float(x) for x in w]
        w[-1] = 1.0 - sum(w[:-1])
    return CoefficientSequence(tuple(zip(ks, w)))


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("[")[1].split("]")[0])):
            terminalreporter.write_line(line)
