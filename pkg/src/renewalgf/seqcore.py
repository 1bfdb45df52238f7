"""Coefficient sequences, exponential polynomials and their evaluation.

Two numeric paths live side by side:

* binary64 (numpy, vectorised over theta) for desk-scale checks;
* configurable precision (mpmath, ``prec`` mantissa bits) for the deep
  constructions whose flat points shrink below double resolution.

The mp path is chosen when the polynomial carries ``prec > 53``, when any
weight or theta is an ``mpf``, or when a frequency exceeds 2**53.

Error model of the binary64 evaluation.  Dense integer polynomials of degree
``n <= CLENSHAW_MAX_DEGREE`` are summed by Clenshaw's recurrence for the
cosine and sine parts; its forward error is bounded by roughly
``n**2 * eps * sum(a_k)`` (the growth factor ``n**2`` appears near theta = 0
and theta = pi).  All other inputs are summed term by term with error
``<= n_terms * eps * sum(a_k)`` on top of the ``|k * theta| * eps`` rounding of
each phase.  ``one_minus_eval`` never forms ``1 - f`` by subtraction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Callable, Iterable, Mapping

import mpmath
import numpy as np

from .errors import DomainError, PoleError, TailOverlapError
from .serialize import decode_number, encode_number

NORMALIZATION_TOL = 1e-12
CLENSHAW_MAX_DEGREE = 4096
POLE_TOL = 1e-300
_EXACT_FREQ_LIMIT = 2**53
_CHUNK = 1 << 20


class _Undefined:
    def __repr__(self):
        return "UNDEFINED_AT_ZERO"


#: returned by :func:`reciprocal_ratio` at theta = 0
UNDEFINED_AT_ZERO = _Undefined()


def _is_mp(x) -> bool:
    return isinstance(x, (mpmath.mpf, mpmath.mpc))


def _check_weight(a):
    if a < 0:
        raise DomainError(f"negative coefficient {a!r}")


@dataclass(frozen=True)
class ExpPolynomial:
    """Finite sum ``sum_j w_j exp(i lambda_j theta)``.

    ``terms`` holds ``(frequency, weight)`` pairs sorted by frequency.  In
    ``"integer"`` mode frequencies are Python ints (arbitrary size); in
    ``"real"`` mode any positive reals.  ``prec`` is the working precision
    (bits) used whenever the mp path evaluates this polynomial.
    """

    terms: tuple
    mode: str = "integer"
    prec: int = 53

    def __post_init__(self):
        if self.mode not in ("integer", "real"):
            raise DomainError(f"unknown mode {self.mode!r}")
        clean = []
        for lam, a in self.terms:
            if self.mode == "integer":
                if isinstance(lam, float) and lam.is_integer():
                    lam = int(lam)
                elif isinstance(lam, Fraction) and lam.denominator == 1:
                    lam = lam.numerator
                if not isinstance(lam, int) or isinstance(lam, bool):
                    raise DomainError(f"integer mode needs integer frequencies, got {lam!r}")
            if not lam > 0:
                raise DomainError(f"frequencies must be positive, got {lam!r}")
            _check_weight(a)
            clean.append((lam, a))
        clean.sort(key=lambda t: t[0])
        for (l1, _), (l2, _) in zip(clean, clean[1:]):
            if l1 == l2:
                raise DomainError(f"repeated frequency {l1!r}")
        object.__setattr__(self, "terms", tuple(clean))

    @classmethod
    def from_pairs(cls, pairs, mode="integer", prec=53) -> "ExpPolynomial":
        if isinstance(pairs, Mapping):
            pairs = pairs.items()
        return cls(tuple((k, a) for k, a in pairs), mode, prec)

    @property
    def freqs(self) -> tuple:
        return tuple(t[0] for t in self.terms)

    @property
    def weights(self) -> tuple:
        return tuple(t[1] for t in self.terms)

    @property
    def degree(self):
        return self.terms[-1][0] if self.terms else 0

    def total_weight(self):
        with mpmath.workprec(self.prec):
            return sum(self.weights) if self.terms else 0

    @property
    def normalized(self) -> bool:
        return abs(float(self.total_weight()) - 1.0) <= NORMALIZATION_TOL

    @property
    def uses_mp(self) -> bool:
        if self.prec > 53:
            return True
        return any(_is_mp(a) or _is_mp(lam) or abs(lam) > _EXACT_FREQ_LIMIT
                   for lam, a in self.terms)

    def with_prec(self, prec: int) -> "ExpPolynomial":
        return ExpPolynomial(self.terms, self.mode, prec)

    def to_record(self) -> dict:
        return {
            "mode": self.mode,
            "terms": [[encode_number(l, self.prec), encode_number(a, self.prec)]
                      for l, a in self.terms],
            "tail_mass": 0,
            "normalized": self.normalized,
            **({"prec": self.prec} if self.prec != 53 else {}),
        }


@dataclass(frozen=True)
class CoefficientSequence:
    """Sparse nonnegative ``(a_k)_{k>=1}`` with a record of the omitted tail.

    ``tail_mass`` is the total mass of the coefficients that are not stored;
    they are known to sit at indices beyond the largest stored index.
    """

    entries: tuple
    tail_mass: object = 0
    normalized: bool | None = None

    def __post_init__(self):
        if isinstance(self.entries, Mapping):
            items = list(self.entries.items())
        else:
            items = list(self.entries)
        clean = {}
        for k, a in items:
            if isinstance(k, float) and k.is_integer():
                k = int(k)
            if not isinstance(k, int) or k < 1:
                raise DomainError(f"indices must be integers >= 1, got {k!r}")
            _check_weight(a)
            if k in clean:
                raise DomainError(f"repeated index {k}")
            clean[k] = a
        _check_weight(self.tail_mass)
        object.__setattr__(self, "entries", tuple(sorted(clean.items())))
        total = float(sum(a for _, a in self.entries) + self.tail_mass) if self.entries or self.tail_mass else 0.0
        ok = abs(total - 1.0) <= NORMALIZATION_TOL
        if self.normalized is None:
            object.__setattr__(self, "normalized", ok)
        elif self.normalized and not ok:
            raise DomainError(f"flagged normalized but total mass is {total!r}")

    @classmethod
    def from_weights(cls, weights: Iterable, start: int = 1, tail_mass=0) -> "CoefficientSequence":
        """``weights[j]`` becomes ``a_{start+j}``; zeros are dropped."""
        return cls(tuple((start + j, a) for j, a in enumerate(weights) if a != 0), tail_mass)

    @property
    def support_max(self) -> int:
        return self.entries[-1][0] if self.entries else 0

    def as_dict(self) -> dict:
        return dict(self.entries)

    def to_poly(self, prec: int = 53) -> ExpPolynomial:
        """Stored terms, plus the tail lumped at the first omitted index.

        The lumped completion is an element of A+ that agrees with every
        ``r, W, U`` functional whose cutoff lies inside the stored range.
        """
        terms = list(self.entries)
        if self.tail_mass:
            terms.append((self.support_max + 1, self.tail_mass))
        return ExpPolynomial(tuple(terms), "integer", prec)

    def to_record(self) -> dict:
        return {
            "mode": "integer",
            "terms": [[k, encode_number(a)] for k, a in self.entries],
            "tail_mass": encode_number(self.tail_mass),
            "normalized": bool(self.normalized),
        }


def from_record(rec: Mapping):
    """Build a :class:`CoefficientSequence` (integer mode, or with a tail) or
    an :class:`ExpPolynomial` (real mode / explicit precision) from a record."""
    try:
        mode = rec.get("mode", "integer")
        prec = int(rec.get("prec", 53))
        terms = [(decode_number(l, prec), decode_number(a, prec)) for l, a in rec["terms"]]
        tail = decode_number(rec.get("tail_mass", 0), prec)
        flag = rec.get("normalized")
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"malformed coefficient record: {exc}") from exc
    if mode == "real" or prec != 53:
        if tail:
            raise DomainError("tail_mass is only supported for integer-mode sequences")
        poly = ExpPolynomial(tuple(terms), mode, prec)
        if flag and not poly.normalized:
            raise DomainError("record flagged normalized but weights do not sum to 1")
        return poly
    if mode != "integer":
        raise DomainError(f"unknown mode {mode!r}")
    return CoefficientSequence(tuple(terms), tail, flag)


def as_poly(f) -> ExpPolynomial:
    if isinstance(f, ExpPolynomial):
        return f
    if isinstance(f, CoefficientSequence):
        return f.to_poly()
    if isinstance(f, Mapping):
        return ExpPolynomial.from_pairs(f)
    raise TypeError(f"expected a sequence or polynomial, got {type(f).__name__}")


@dataclass(frozen=True)
class WeightSpec:
    """Weight sequence ``w_k`` defining the norm of ``A(w)``.

    ``kind="power"`` gives ``w_k = k**nu`` with ``nu`` in [0, 1);
    ``kind="general"`` gives ``w_k = k * eps(k)`` and insists ``w_k >= 1``.
    Real frequencies are weighted at ``ceil(lambda)``.
    """

    kind: str
    nu: float = 0.0
    eps: Callable | None = field(default=None, compare=False)

    @classmethod
    def power(cls, nu) -> "WeightSpec":
        if not 0 <= nu < 1:
            raise DomainError(f"power weight exponent must lie in [0,1), got {nu!r}")
        return cls("power", nu)

    @classmethod
    def general(cls, eps: Callable) -> "WeightSpec":
        return cls("general", eps=eps)

    def __call__(self, k):
        if not isinstance(k, int):
            k = int(mpmath.ceil(k)) if _is_mp(k) else math.ceil(k)
        if self.kind == "power":
            if self.nu == 0:
                return 1
            if k > 2**1000 or _is_mp(self.nu):
                return mpmath.mpf(k) ** self.nu
            return float(k) ** self.nu
        e = self.eps(k)
        w = k * e
        if w < 1 - 1e-12:
            raise DomainError(f"k*eps_k = {w!r} < 1 at k={k}")
        return w


@dataclass(frozen=True)
class MomentFunctionals:
    """Tail mass beyond ``1/theta`` and first/second partial moments up to it."""

    theta: object
    r: object
    W: object
    U: object

    @property
    def cutoff(self) -> int:
        return _cutoff(self.theta)


def _cutoff(theta) -> int:
    if isinstance(theta, Fraction):
        return math.floor(1 / theta)
    if _is_mp(theta):
        return int(mpmath.floor(1 / theta))
    n = math.floor(1.0 / theta)
    # guard 1/theta landing just below an integer that theta represents exactly
    if (n + 1) * theta <= 1.0:
        n += 1
    return n


def _as_theta(theta):
    if _is_mp(theta):
        if not mpmath.isfinite(theta):
            raise DomainError(f"non-finite theta {theta!r}")
        return theta
    arr = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("non-finite theta")
    if np.any(np.abs(arr) > math.pi * (1 + 1e-15)):
        raise DomainError("theta must lie in [-pi, pi]")
    return arr


def _float_terms(p: ExpPolynomial):
    k = np.array([float(l) for l in p.freqs], dtype=float)
    a = np.array([float(w) for w in p.weights], dtype=float)
    return k, a


def _is_dense_int(p: ExpPolynomial) -> bool:
    return (p.mode == "integer" and p.terms and p.degree <= CLENSHAW_MAX_DEGREE
            and len(p.terms) * 8 >= p.degree)


def _clenshaw(p: ExpPolynomial, th: np.ndarray):
    n = p.degree
    coef = np.zeros(n + 2)
    for k, a in p.terms:
        coef[k] = float(a)
    c = np.cos(th)
    two_c = 2.0 * c
    b1 = np.zeros_like(th)
    b2 = np.zeros_like(th)
    for k in range(n, 0, -1):
        b1, b2 = coef[k] + two_c * b1 - b2, b1
    return (c * b1 - b2) + 1j * (np.sin(th) * b1)


def _direct(p: ExpPolynomial, th: np.ndarray, one_minus: bool):
    k, a = _float_terms(p)
    flat = th.ravel()
    out = np.zeros(flat.shape, dtype=complex)
    step = max(1, _CHUNK // max(1, len(k)))
    for s in range(0, flat.size, step):
        x = np.multiply.outer(flat[s:s + step], k)
        if one_minus:
            re = 2.0 * np.sin(0.5 * x) ** 2
            im = -np.sin(x)
        else:
            re = np.cos(x)
            im = np.sin(x)
        out[s:s + step] = re @ a + 1j * (im @ a)
    return out.reshape(th.shape)


def _mp_theta(theta, prec):
    with mpmath.workprec(prec):
        return mpmath.mpf(theta) if not isinstance(theta, mpmath.mpf) else +theta


def _mp_eval_scalar(p: ExpPolynomial, theta, one_minus: bool, prec: int):
    with mpmath.workprec(prec):
        t = _mp_theta(theta, prec)
        re = mpmath.mpf(0)
        im = mpmath.mpf(0)
        for lam, a in p.terms:
            x = lam * t
            if one_minus:
                re += a * 2 * mpmath.sin(x / 2) ** 2
                im -= a * mpmath.sin(x)
            else:
                re += a * mpmath.cos(x)
                im += a * mpmath.sin(x)
        return mpmath.mpc(re, im)


def _dispatch(f, theta, one_minus: bool, prec):
    p = as_poly(f)
    th = _as_theta(theta)
    use_mp = p.uses_mp or _is_mp(theta) or (prec is not None and prec > 53)
    if use_mp:
        bits = max(p.prec, prec or 0, 53)
        if _is_mp(theta) or np.ndim(th) == 0:
            return _mp_eval_scalar(p, theta if _is_mp(theta) else float(th), one_minus, bits)
        return np.array([_mp_eval_scalar(p, float(t), one_minus, bits) for t in th.ravel()],
                        dtype=object).reshape(th.shape)
    if not p.terms:
        z = np.zeros(th.shape, dtype=complex)
        return complex(z) if th.ndim == 0 else z
    if not one_minus and _is_dense_int(p):
        out = _clenshaw(p, np.atleast_1d(th)).reshape(th.shape)
    else:
        out = _direct(p, th, one_minus)
    return complex(out) if th.ndim == 0 else out


def eval(f, theta, prec: int | None = None):
    """``f(theta) = sum a_k exp(i k theta)`` (real frequencies in real mode)."""
    return _dispatch(f, theta, False, prec)


def one_minus_eval(f, theta, prec: int | None = None):
    """``1 - f(theta)`` via ``1 - e^{ix} = 2 sin^2(x/2) - i sin x`` term by term.

    Assumes the weights sum to one (the A+ normalisation).
    """
    return _dispatch(f, theta, True, prec)


def weighted_norm(f, w: WeightSpec):
    """``sum_k w_k |a_k|`` over the stored terms."""
    p = as_poly(f)
    with mpmath.workprec(max(p.prec, 53)):
        return sum((w(l) * abs(a) for l, a in p.terms), 0)


def _entries_of(f):
    if isinstance(f, CoefficientSequence):
        return f.entries, f.tail_mass, f.support_max
    p = as_poly(f)
    if p.mode != "integer":
        raise DomainError("moment functionals need integer frequencies")
    return p.terms, 0, p.degree


def moment_functionals(f, theta) -> MomentFunctionals:
    """``r(theta), W(theta), U(theta)`` with cutoff ``n = floor(1/theta)``."""
    if not 0 < theta <= 1:
        raise DomainError(f"theta must lie in (0,1], got {theta!r}")
    entries, tail, top = _entries_of(f)
    n = _cutoff(theta)
    if tail and top < n:
        raise TailOverlapError(
            f"stored support ends at {top} but cutoff floor(1/theta)={n}: tail location unknown")
    r = tail
    W = 0
    U = 0
    for k, a in entries:
        if k <= n:
            W += k * a
            U += k * k * a
        else:
            r += a
    return MomentFunctionals(theta, r, W, U)


def reciprocal_ratio(f, theta, prec: int | None = None):
    """``R_f(theta) = theta / (1 - f(theta))``.

    At ``theta == 0`` the scalar call returns :data:`UNDEFINED_AT_ZERO`; array
    calls put ``nan`` there.  A vanishing denominator elsewhere raises
    :class:`PoleError`.
    """
    if not _is_mp(theta) and np.ndim(theta) == 0:
        if float(theta) == 0.0:
            return UNDEFINED_AT_ZERO
    elif _is_mp(theta) and theta == 0:
        return UNDEFINED_AT_ZERO
    om = one_minus_eval(f, theta, prec)
    if _is_mp(om) or isinstance(om, complex):
        if abs(om) <= POLE_TOL:
            raise PoleError(theta)
        return theta / om
    th = np.asarray(theta, dtype=float)
    out = np.full(th.shape, complex(np.nan, np.nan))
    nz = th != 0
    bad = nz & (np.abs(om) <= POLE_TOL)
    if np.any(bad):
        raise PoleError(float(th[bad].ravel()[0]))
    out[nz] = th[nz] / om[nz]
    return out


def is_aperiodic(f) -> bool:
    """True iff the gcd of ``{k : a_k > 0}`` equals one."""
    if isinstance(f, CoefficientSequence):
        support = [k for k, a in f.entries if a > 0]
        tail = f.tail_mass
    else:
        p = as_poly(f)
        if p.mode != "integer":
            raise DomainError("aperiodicity is defined for integer frequencies")
        support = [k for k, a in p.terms if a > 0]
        tail = 0
    if not support:
        raise DomainError("empty support")
    g = reduce(math.gcd, support)
    if g != 1 and tail:
        raise DomainError("stored support has gcd > 1 and the tail is unknown")
    return g == 1


def derivative_bound(f):
    """``sum |lambda| w``, an upper bound on ``sup |f'|``."""
    p = as_poly(f)
    with mpmath.workprec(max(p.prec, 53)):
        return sum((abs(l) * a for l, a in p.terms), 0)
