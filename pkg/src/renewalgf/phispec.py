"""Tiny expression grammar for the gauge functions phi, psi, chi.

A spec is a ``*``-separated product of factors, each one of

    <number>
    theta            theta^a          theta^(a)
    abs(log(theta))  abs(log(theta))^a

with decimal (possibly negative) exponents ``a``.  Every spec therefore
denotes ``c * theta^p * |log theta|^q``; the class is closed under products
and real powers, which is all the constructions need.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction

import mpmath

from .errors import DomainError

_NUM = r"[-+]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?"
_EXP = rf"\^\s*(?:\(\s*(?P<{{name}}>{_NUM})\s*\)|(?P<{{name}}2>{_NUM}))"
_THETA = re.compile(r"^theta(?:" + _EXP.format(name="a") + r")?$")
_LOG = re.compile(r"^abs\(\s*log\(\s*theta\s*\)\s*\)(?:" + _EXP.format(name="a") + r")?$")
_CONST = re.compile(rf"^{_NUM}$")


def _frac(text: str) -> Fraction:
    return Fraction(text)


def _fmt(x: Fraction) -> str:
    if x.denominator == 1:
        return str(x.numerator)
    return repr(float(x)) if Fraction(float(x)) == x else f"({x.numerator}/{x.denominator})"


@dataclass(frozen=True)
class PhiSpec:
    """``coef * theta**theta_pow * |log theta|**log_pow`` on (0, 1]."""

    coef: Fraction = Fraction(1)
    theta_pow: Fraction = Fraction(0)
    log_pow: Fraction = Fraction(0)

    def __post_init__(self):
        if self.coef <= 0:
            raise DomainError("gauge functions must be positive")

    def __call__(self, theta):
        if isinstance(theta, mpmath.mpf):
            val = mpmath.mpf(self.coef.numerator) / self.coef.denominator
            if self.theta_pow:
                val *= theta ** _mp(self.theta_pow)
            if self.log_pow:
                val *= abs(mpmath.log(theta)) ** _mp(self.log_pow)
            return val
        val = float(self.coef)
        if self.theta_pow:
            val *= theta ** float(self.theta_pow)
        if self.log_pow:
            val *= abs(math.log(theta)) ** float(self.log_pow)
        return val

    def __mul__(self, other: "PhiSpec") -> "PhiSpec":
        return PhiSpec(self.coef * other.coef, self.theta_pow + other.theta_pow,
                       self.log_pow + other.log_pow)

    def __pow__(self, a) -> "PhiSpec":
        a = Fraction(a)
        coef = self.coef ** a
        if not isinstance(coef, Fraction):
            coef = Fraction(coef).limit_denominator(10**15) if coef != 1 else Fraction(1)
        return PhiSpec(coef, self.theta_pow * a, self.log_pow * a)

    def times_theta(self, a) -> "PhiSpec":
        return PhiSpec(self.coef, self.theta_pow + Fraction(a), self.log_pow)

    def tends_to_zero(self) -> bool:
        """Exact asymptotic test for theta -> 0+."""
        return self.theta_pow > 0 or (self.theta_pow == 0 and self.log_pow < 0)

    def tends_to_infinity(self) -> bool:
        return self.theta_pow < 0 or (self.theta_pow == 0 and self.log_pow > 0)

    def __str__(self) -> str:
        parts = []
        if self.coef != 1:
            parts.append(_fmt(self.coef))
        if self.theta_pow:
            parts.append("theta" if self.theta_pow == 1 else f"theta^{_fmt(self.theta_pow)}")
        if self.log_pow:
            parts.append("abs(log(theta))" if self.log_pow == 1
                         else f"abs(log(theta))^{_fmt(self.log_pow)}")
        return "*".join(parts) or "1"


def _mp(x: Fraction):
    return mpmath.mpf(x.numerator) / x.denominator


def parse_phi(text: str) -> PhiSpec:
    """Parse a gauge-function spec such as ``"theta^-0.25*abs(log(theta))^2"``."""
    if not isinstance(text, str) or not text.strip():
        raise DomainError("empty phi spec")
    spec = PhiSpec()
    # split on '*' that are not inside parentheses
    depth, start, factors = 0, 0, []
    for i, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == "*" and depth == 0:
            factors.append(text[start:i])
            start = i + 1
    factors.append(text[start:])
    for raw in factors:
        tok = raw.strip().replace(" ", "")
        m = _THETA.match(tok)
        if m:
            a = m.group("a") or m.group("a2") or "1"
            spec = spec * PhiSpec(theta_pow=_frac(a))
            continue
        m = _LOG.match(tok)
        if m:
            a = m.group("a") or m.group("a2") or "1"
            spec = spec * PhiSpec(log_pow=_frac(a))
            continue
        if _CONST.match(tok):
            c = _frac(tok)
            if c <= 0:
                raise DomainError(f"non-positive constant factor {tok!r}")
            spec = spec * PhiSpec(coef=c)
            continue
        raise DomainError(f"cannot parse phi factor {raw!r}")
    return spec
