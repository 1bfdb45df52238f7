"""Continuous-time side: discrete Bernstein functions and the ratio probe.

A Bernstein function with a finite atomic measure,
``phi(z) = z + c + sum_j m_j (1 - exp(-z t_j))``, is the Laplace exponent of a
p-function ``g``.  If ``g`` had bounded variation with ``g(inf) = 0`` then
``i theta / (i theta - phi_0(-i theta)) -> 0`` as ``theta -> 0``.  The probe
evaluates that ratio for ``phi_0(z) = 1 - sum a_k exp(-lambda_k z)``, i.e. at
``1 - f(theta)``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import mpmath

from .construct import ConstructionConfig, _check_eps_seq, betak_counterexample
from .errors import DomainError, PoleError, PrecisionExhausted
from .reports import VerificationReport, check
from .seqcore import POLE_TOL, ExpPolynomial, WeightSpec, as_poly, one_minus_eval, weighted_norm


@dataclass(frozen=True)
class DiscreteBernstein:
    """Drift-free part ``c`` and atoms ``(t, mass)`` of the Levy measure."""

    c: float = 0.0
    atoms: tuple = field(default_factory=tuple)

    def __post_init__(self):
        atoms = tuple((t, m) for t, m in self.atoms)
        if self.c < 0:
            raise DomainError("c must be nonnegative")
        for t, m in atoms:
            if not t > 0:
                raise DomainError(f"atom location must be positive, got {t!r}")
            if m < 0:
                raise DomainError(f"atom mass must be nonnegative, got {m!r}")
        object.__setattr__(self, "atoms", atoms)

    @property
    def total_mass(self):
        return sum((m for _, m in self.atoms), 0)

    @property
    def first_moment(self):
        return sum((t * m for t, m in self.atoms), 0)

    def to_record(self) -> dict:
        from .serialize import encode_number
        return {"c": encode_number(self.c), "atoms": [[encode_number(t), encode_number(m)]
                                                      for t, m in self.atoms]}

    @classmethod
    def from_record(cls, rec: dict) -> "DiscreteBernstein":
        from .serialize import decode_number
        return cls(decode_number(rec.get("c", 0)),
                   tuple((decode_number(t), decode_number(m)) for t, m in rec.get("atoms", [])))


def _one_minus_exp(w: complex) -> complex:
    """``1 - e^{-w}`` without cancellation for small ``|w|``.

    With ``w = x + iy``: ``1 - e^{-w} = -expm1(-x) cos y + 2 sin^2(y/2) + i e^{-x} sin y``.
    """
    x, y = w.real, w.imag
    return complex(-math.expm1(-x) * math.cos(y) + 2 * math.sin(y / 2) ** 2,
                   math.exp(-x) * math.sin(y))


def bernstein_eval(phi: DiscreteBernstein, z) -> complex:
    """``z + c + sum m (1 - e^{-z t})`` for ``Re z >= 0``."""
    z = complex(z)
    if z.real < 0:
        raise DomainError("need Re z >= 0")
    acc = z + phi.c
    for t, m in phi.atoms:
        acc += float(m) * _one_minus_exp(z * float(t))
    return acc


def vanishing_ratio_probe(series, thetas) -> list:
    """``i theta / (i theta - (1 - f(theta)))`` for each ``theta``.

    ``1 - f`` comes from the cancellation-free kernel; values below double range
    (mpf thetas from deep constructions) are handled at the series precision.
    A denominator below ``1e-300`` relative to ``theta`` is a pole.
    """
    p = as_poly(series)
    out = []
    prev = None
    for th in thetas:
        if not th > 0:
            raise DomainError("thetas must be positive")
        if prev is not None and not th < prev:
            raise DomainError("thetas must be strictly decreasing")
        prev = th
        if isinstance(th, mpmath.mpf) or p.uses_mp:
            with mpmath.workprec(max(p.prec, 53)):
                t = mpmath.mpf(th)
                den = mpmath.mpc(0, t) - one_minus_eval(p, t)
                if abs(den) <= POLE_TOL * t:
                    raise PoleError(th)
                out.append(mpmath.mpc(0, t) / den)
        else:
            t = float(th)
            den = 1j * t - one_minus_eval(p, t)
            if abs(den) <= POLE_TOL * t:
                raise PoleError(th)
            out.append(1j * t / den)
    return out


def bernstein_from_series(series) -> DiscreteBernstein:
    """Atoms ``(lambda_k, a_k)``: ``1 - F(e^{-z}) = sum a_k (1 - e^{-lambda_k z})``
    for a normalised series."""
    p = as_poly(series)
    return DiscreteBernstein(0.0, tuple((l, a) for l, a in p.terms if a > 0))


def hww_construct(beta, eps: float, M: int, cfg: ConstructionConfig | None = None,
                  f0=None):
    """Betak construction in ``A(k beta(k))`` read as a discrete Bernstein function.

    Returns ``(DiscreteBernstein, reports, trace)``.  A construction stopped by
    the precision cap keeps the stages it completed.  The reports are the
    weighted-moment budget ``sum k beta(k) a_k <= ||f0|| + eps`` and the probe
    along the stage points, whose magnitudes are required to strictly decrease.
    """
    cfg = cfg or ConstructionConfig()
    _check_eps_seq(beta, "beta")
    f0 = as_poly(f0 if f0 is not None else {1: 1})
    try:
        trace = betak_counterexample(f0, eps, beta, M, cfg)
    except PrecisionExhausted as exc:
        if exc.trace is None or not exc.trace.stages:
            raise
        trace = exc.trace
    F = trace.final
    nu = bernstein_from_series(F)
    w = WeightSpec.general(lambda k: beta(mpmath.mpf(k)))
    with mpmath.workprec(trace.prec):
        moment = weighted_norm(F, w)
        budget = weighted_norm(f0, w) + eps
    reports = [check("weighted-moment-budget", moment, budget, 0.0,
                     {"eps": eps, "stages": len(trace.stages)})]
    thetas = [s.theta for s in trace.stages]
    ratios = vanishing_ratio_probe(F, thetas)
    mags = [abs(r) for r in ratios]
    dec = all(b < a for a, b in zip(mags, mags[1:]))
    with mpmath.workprec(trace.prec):
        slopes = [abs(one_minus_eval(F, t)) / t for t in thetas]
    reports.append(VerificationReport(
        "vanishing-ratio-probe", {"stages": len(thetas)}, mags, None, dec, None, 0.0,
        {"one_minus_over_theta": slopes, "exhausted": trace.exhausted}))
    return nu, reports, trace
