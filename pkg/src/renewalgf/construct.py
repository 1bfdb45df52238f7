"""Polynomials in A+ that stay close to a target yet are nearly 1 on windows.

All constructions run on mpmath numbers.  ``Precision("binary64")`` pins the
working precision to 53 bits and refuses flat points below ``1e-12``;
``Precision("extended", bits)`` lets each stage pick its own working
precision (about ``2.5 * |log2 theta| + 128`` bits) up to the ``bits`` cap.

Searches over theta (thresholds, gap targets) run at a low precision with
mpmath's unbounded exponent range; only the final root and the certificates
are computed at the stage precision.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import mpmath

from .errors import (CertificationError, DomainError, PreconditionError,
                     PrecisionExhausted, RootError, SubsequenceNotFound)
from .phispec import PhiSpec
from .reports import VerificationReport, check
from .seqcore import ExpPolynomial, WeightSpec, as_poly, is_aperiodic

TWO_PI = 2 * math.pi
SEARCH_PREC = 64
SLACK = 1e-12


# --------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class Precision:
    """Arithmetic regime of a construction."""

    mode: str = "binary64"
    bits: int = 53
    binary64_floor: float = 1e-12

    def __post_init__(self):
        if self.mode not in ("binary64", "extended"):
            raise DomainError(f"unknown precision mode {self.mode!r}")
        if self.mode == "binary64" and self.bits != 53:
            object.__setattr__(self, "bits", 53)
        if self.bits < 53:
            raise DomainError("precision below 53 bits")

    @classmethod
    def parse(cls, text: str) -> "Precision":
        """``"binary64"`` or ``"extended:BITS"``."""
        text = text.strip()
        if text == "binary64":
            return cls()
        if text.startswith("extended"):
            _, _, bits = text.partition(":")
            return cls("extended", int(bits) if bits else 32768)
        raise DomainError(f"bad precision {text!r}; use binary64 or extended:BITS")

    def __str__(self):
        return "binary64" if self.mode == "binary64" else f"extended:{self.bits}"

    @property
    def search_prec(self) -> int:
        return 53 if self.mode == "binary64" else SEARCH_PREC

    def floor(self):
        if self.mode == "binary64":
            return mpmath.mpf(self.binary64_floor)
        return mpmath.mpf(2) ** (-int((self.bits - 128) / 2.5))

    def stage_prec(self, theta) -> int:
        if self.mode == "binary64":
            return 53
        need = int(2.5 * abs(float(mpmath.log(theta, 2)))) + 128
        return max(need, 128)


@dataclass(frozen=True)
class ConstructionConfig:
    precision: Precision = field(default_factory=Precision)
    grid_points: int = 10_000
    safety: float = 2.0
    samples: int = 201
    root_rtol: float = 1e-14
    max_retries: int = 64


def _ctx_floor(cfg: ConstructionConfig):
    with mpmath.workprec(cfg.precision.search_prec):
        return cfg.precision.floor()


# --------------------------------------------------------------------------
# the elementary rotation


def _sin(x):
    return mpmath.sin(x) if isinstance(x, mpmath.mpf) else math.sin(x)


def _cos(x):
    return mpmath.cos(x) if isinstance(x, mpmath.mpf) else math.cos(x)


def combination_modulus(lam, gam, d=None):
    """``|(1 - e^{i lam}) + d (1 - e^{-i gam})|``; with ``d`` omitted uses
    ``croft_coefficient`` and the closed form ``2 sin(lam/2) sin((gam+lam)/2)``."""
    if d is None:
        return 2 * _sin(lam / 2) * _sin((gam + lam) / 2)
    re = 2 * _sin(lam / 2) ** 2 + d * 2 * _sin(gam / 2) ** 2
    im = -_sin(lam) + d * _sin(gam)
    return (mpmath.sqrt(re * re + im * im) if isinstance(re, mpmath.mpf)
            else math.hypot(re, im))


def croft_coefficient(lam, gam, certify: bool = True):
    """``d = sin(lam/2) cos((gam+lam)/2) / sin(gam/2)`` for lam, gam in (0, 1].

    Certifies ``lam/(4 gam) <= d <= lam/gam`` and the combination bound
    ``|(1-e^{i lam}) + d(1-e^{-i gam})| <= lam (gam+lam)/2``.
    """
    if not (0 < lam <= 1 and 0 < gam <= 1):
        raise DomainError(f"need lam, gam in (0,1], got {lam!r}, {gam!r}")
    d = _sin(lam / 2) * _cos((gam + lam) / 2) / _sin(gam / 2)
    if certify:
        lo, hi = lam / (4 * gam), lam / gam
        comb = combination_modulus(lam, gam, d)
        if not (lo * (1 - SLACK) <= d <= hi * (1 + SLACK)):
            raise CertificationError(f"d={d} outside [{lo}, {hi}]")
        if comb > lam * (gam + lam) / 2 * (1 + SLACK) + SLACK:
            raise CertificationError(f"combination modulus {comb} too large")
    return d


def _rotation_weight(P: ExpPolynomial, theta, gam):
    return sum(a * croft_coefficient(k * theta, gam, certify=False) for k, a in P.terms)


def attach_rotation(P, theta0, gamma):
    """Return ``(d, Q)`` with ``Q = (P + d e^{i(2pi-gamma) theta/theta0}) / (1+d)``.

    ``Q`` is a real-frequency polynomial; ``d = sum a_k d_{k theta0, gamma}``.
    """
    P = as_poly(P)
    if P.mode != "integer":
        raise DomainError("attach_rotation expects an integer-frequency polynomial")
    n = P.degree
    if not 0 < theta0 <= 1 / n * (1 + 1e-15):
        raise PreconditionError(f"theta0={theta0!r} must lie in (0, 1/n] with n={n}")
    if not 0 < gamma <= 1:
        raise DomainError(f"gamma must lie in (0,1], got {gamma!r}")
    mp = P.uses_mp or isinstance(theta0, mpmath.mpf) or isinstance(gamma, mpmath.mpf)
    with mpmath.workprec(max(P.prec, 53)):
        pi2 = 2 * mpmath.pi if mp else TWO_PI
        d = _rotation_weight(P, theta0, gamma)
        lam = (pi2 - gamma) / theta0
        terms = [(k, a / (1 + d)) for k, a in P.terms] + [(lam, d / (1 + d))]
    return d, ExpPolynomial(tuple(terms), "real", P.prec)


def rotation_certificates(P, theta0, gamma, d, Q) -> list:
    """The three certified bounds of an attached rotation."""
    from .seqcore import derivative_bound, one_minus_eval

    P = as_poly(P)
    n = P.degree
    res = abs(one_minus_eval(Q, theta0))
    return [
        check("rotation-d-lower", theta0 / (4 * gamma), d, SLACK * d),
        check("rotation-d-upper", d, n * theta0 / gamma, SLACK * d),
        check("rotation-flat-point", res, 2 * n * theta0 * gamma, 1e-15),
        check("rotation-derivative", derivative_bound(Q), n * (1 + TWO_PI / gamma), 1e-12),
    ]


def _to_fraction(x) -> Fraction:
    if isinstance(x, mpmath.mpf):
        man, exp = x.man_exp
        return Fraction(man) * Fraction(2) ** exp
    return Fraction(x)


def _from_fraction(q: Fraction):
    """Exact mpf for a dyadic rational."""
    num, den = q.numerator, q.denominator
    k = den.bit_length() - 1
    if den != 1 << k:
        raise ValueError("not a dyadic rational")
    with mpmath.workprec(max(abs(num).bit_length(), 53) + 4):
        return mpmath.ldexp(mpmath.mpf(num), -k)


def exact_defect(P: ExpPolynomial) -> Fraction:
    """``|1 - sum of weights|`` computed without rounding."""
    return abs(1 - sum((_to_fraction(a) for _, a in P.terms), Fraction(0)))


def _append_term(P: ExpPolynomial, m: int, d, prec: int) -> ExpPolynomial:
    """``(P + d e^{i m theta}) / (1 + d)`` whose new weight closes the sum to
    exactly one (it differs from ``d/(1+d)`` by rounding only)."""
    scaled = [(k, a / (1 + d)) for k, a in P.terms]
    rest = 1 - sum((_to_fraction(a) for _, a in scaled), Fraction(0))
    last = _from_fraction(rest) if rest > 0 else d / (1 + d)
    return ExpPolynomial(tuple(scaled + [(m, last)]), "integer", prec)


def _integer_rotation(P: ExpPolynomial, theta, m: int, gam, prec: int) -> tuple:
    """Rotation that lands exactly on integer frequency ``m``: requires
    ``m * theta = 2 pi - gam``."""
    d = _rotation_weight(P, theta, gam)
    return d, _append_term(P, m, d, prec)


# --------------------------------------------------------------------------
# windows and certification


@dataclass(frozen=True)
class FlatWindow:
    theta_m: object
    half_width: object
    bound: object
    m: int

    def __post_init__(self):
        if self.half_width < 0 or not self.bound > 0:
            raise DomainError("window needs half_width >= 0 and bound > 0")

    def to_record(self, prec=53) -> dict:
        return {"theta_m": _enc(self.theta_m, prec), "half_width": _enc(self.half_width, prec),
                "bound": _enc(self.bound, prec), "m": self.m}


def _enc(x, prec):
    from .serialize import encode_number
    if isinstance(x, mpmath.mpf):
        return encode_number(x, prec)
    return encode_number(float(x)) if not isinstance(x, int) else x


@dataclass(frozen=True)
class WindowCertificate:
    """Sampled supremum of ``|1 - P|`` on a window plus the slack that makes it
    a certified upper bound."""

    sampled_max: object
    lipschitz: object
    spacing: object
    high_weight: object
    defect: object
    certified: object
    samples: int


def certify_window(poly: ExpPolynomial, theta_m, half_width, cutoff=None,
                   samples: int = 201, prec: int | None = None) -> WindowCertificate:
    """Certified ``sup |1 - poly|`` over ``[theta_m - h, theta_m + h]``.

    Terms with frequency above ``cutoff`` are bounded by twice their total
    weight; the remaining part is sampled on an even grid and the Lipschitz
    slack ``L * spacing / 2`` with ``L = sum k a_k`` is added.
    """
    if samples < 2:
        raise DomainError("need at least two samples")
    prec = prec or max(poly.prec, 53)
    with mpmath.workprec(prec):
        cutoff = poly.degree if cutoff is None else cutoff
        low = [(k, a) for k, a in poly.terms if k <= cutoff]
        high = sum((a for k, a in poly.terms if k > cutoff), mpmath.mpf(0))
        q = exact_defect(poly)
        defect = mpmath.mpf(q.numerator) / q.denominator
        L = sum((k * a for k, a in low), mpmath.mpf(0))
        t0 = mpmath.mpf(theta_m)
        h = mpmath.mpf(half_width)
        spacing = 2 * h / (samples - 1)
        best = mpmath.mpf(0)
        for j in range(samples):
            t = t0 - h + j * spacing
            re = mpmath.mpf(0)
            im = mpmath.mpf(0)
            for k, a in low:
                x = k * t
                re += a * 2 * mpmath.sin(x / 2) ** 2
                im -= a * mpmath.sin(x)
            v = mpmath.sqrt(re * re + im * im)
            if v > best:
                best = v
        roundoff = mpmath.mpf(2) ** (10 - prec) * (1 + L * abs(t0))
        cert = best + L * spacing / 2 + 2 * high + defect + roundoff
    return WindowCertificate(best, L, spacing, high, defect, cert, samples)


def _abs_one_minus(poly: ExpPolynomial, theta, prec):
    with mpmath.workprec(prec):
        t = mpmath.mpf(theta)
        re = mpmath.mpf(0)
        im = mpmath.mpf(0)
        for k, a in poly.terms:
            x = k * t
            re += a * 2 * mpmath.sin(x / 2) ** 2
            im -= a * mpmath.sin(x)
        return mpmath.sqrt(re * re + im * im), im


def norm_distance(P, Q, w: WeightSpec):
    """``||P - Q||_{A(w)}`` over the union of supports."""
    P, Q = as_poly(P), as_poly(Q)
    prec = max(P.prec, Q.prec, 53)
    with mpmath.workprec(prec):
        a = dict(P.terms)
        b = dict(Q.terms)
        return sum((w(k) * abs(a.get(k, 0) - b.get(k, 0)) for k in set(a) | set(b)),
                   mpmath.mpf(0))


# --------------------------------------------------------------------------
# gauge-function conditions


def _grid_trend(fun: Callable, to_zero: bool, label: str):
    """Log-grid check ``fun -> 0`` (or ``-> infinity``) as theta -> 0."""
    if isinstance(fun, PhiSpec):
        ok = fun.tends_to_zero() if to_zero else fun.tends_to_infinity()
        if not ok:
            raise PreconditionError(f"{label} fails its limit condition")
        return
    with mpmath.workprec(SEARCH_PREC):
        vals = [fun(mpmath.mpf(10) ** (-(2 ** j))) for j in range(13)]
    first, tail = vals[0], vals[-5:]
    if to_zero:
        ok = tail[-1] <= 0.5 * first and all(b <= a * (1 + 1e-9) for a, b in zip(tail, tail[1:]))
    else:
        ok = tail[-1] >= 2 * first and all(b >= a * (1 - 1e-9) for a, b in zip(tail, tail[1:]))
    if not ok:
        raise PreconditionError(f"{label} fails its limit condition on the log grid")


def _log_grid(lo, hi, n):
    """``n`` log-spaced points in ``[lo, hi)`` ascending."""
    a = mpmath.log(lo)
    b = mpmath.log(hi)
    return [mpmath.exp(a + (b - a) * j / n) for j in range(n)]


# --------------------------------------------------------------------------
# engines: one stage of a construction given the current polynomial


class _RotationEngine:
    """Flat points from ``gamma(theta) = sqrt(psi chi)`` and ``tau = (2pi - gamma)/theta``."""

    name = "rotation"

    def __init__(self, psi, chi, weight: WeightSpec, phi=None, nu=0.0):
        self.psi, self.chi, self.weight = psi, chi, weight
        self.phi, self.nu = phi, nu

    def cond0(self, n, theta, P=None):
        ps, ch = self.psi(theta), self.chi(theta)
        return ch * ps + n * (mpmath.sqrt(ch / ps) + theta) <= 1

    def gamma(self, theta):
        return mpmath.sqrt(self.psi(theta) * self.chi(theta))

    def tau(self, P, theta):
        return (2 * mpmath.pi - self.gamma(theta)) / theta

    def g(self, P, m, theta):
        return m * theta + self.gamma(theta) - 2 * mpmath.pi

    def build(self, P, m, theta, prec):
        gam = 2 * mpmath.pi - m * theta
        if not 0 < gam <= 1:
            raise CertificationError(f"gamma={gam} outside (0,1] at m={m}")
        d, Q = _integer_rotation(P, theta, m, gam, prec)
        return Q, {"gamma": gam, "d": d}

    def predicted_gap(self, P, theta, pnorm):
        gam = self.gamma(theta)
        if gam > 1 or P.degree * theta > 1:
            return mpmath.inf
        d = _rotation_weight(P, theta, gam)
        m = mpmath.ceil((2 * mpmath.pi - gam) / theta)
        return d / (1 + d) * (pnorm + self.weight(int(m)))

    def window(self, theta):
        ps, ch = self.psi(theta), self.chi(theta)
        return ps * ch * theta, 10 * ps * theta, 2 * ps * theta

    def gap_bound(self, theta):
        if self.phi is not None:
            return 2 * (2 * mpmath.pi) ** self.nu / mpmath.sqrt(self.phi(theta))
        return 2 * theta / self.chi(theta)

    def lipschitz_bound(self, theta):
        return (1 + 2 * mpmath.pi) / self.chi(theta)


class _CroftEngine:
    """Flat points where ``Im Q = 0``: ``tau = (2pi - arcsin v)/theta``."""

    name = "croft"

    def __init__(self, phi, nu, weight: WeightSpec):
        self.phi, self.nu, self.weight = phi, nu, weight

    def cond0(self, n, theta, P=None):
        if theta >= 1:
            return False
        ph = self.phi(theta)
        if ph < 1:
            return False
        return n / ph ** 0.25 <= 1 and self.nu + mpmath.log(ph) / abs(mpmath.log(theta)) <= 1

    def dval(self, theta):
        return theta ** self.nu / mpmath.sqrt(self.phi(theta))

    def v(self, P, theta):
        im = sum(a * mpmath.sin(k * theta) for k, a in P.terms)
        return im / self.dval(theta)

    def tau(self, P, theta):
        v = self.v(P, theta)
        if not 0 < v <= 1:
            return mpmath.nan
        return (2 * mpmath.pi - mpmath.asin(v)) / theta

    def g(self, P, m, theta):
        v = self.v(P, theta)
        v = min(max(v, mpmath.mpf(0)), mpmath.mpf(1))
        return m * theta + mpmath.asin(v) - 2 * mpmath.pi

    def build(self, P, m, theta, prec):
        d = self.dval(theta)
        v = self.v(P, theta)
        if not 0 < v <= 1:
            raise CertificationError(f"v(theta)={v} outside (0,1]")
        return _append_term(P, m, d, prec), {"d": d, "v": v}

    def predicted_gap(self, P, theta, pnorm):
        d = self.dval(theta)
        v = self.v(P, theta)
        if not 0 < v <= 1:
            return mpmath.inf
        m = mpmath.ceil((2 * mpmath.pi - mpmath.asin(v)) / theta)
        return d / (1 + d) * (pnorm + self.weight(int(m)))

    def window(self, theta):
        ph = self.phi(theta)
        b = ph * theta ** (2 - self.nu)
        return ph ** 1.5 * theta ** (3 - 2 * self.nu), 10 * b, 2 * b

    def gap_bound(self, theta):
        return 2 * (2 * mpmath.pi) ** self.nu / mpmath.sqrt(self.phi(theta))

    def lipschitz_bound(self, theta):
        return 8 * theta ** (self.nu - 1) / mpmath.sqrt(self.phi(theta))


def corcos_engine(phi, nu):
    if not 0 <= nu < 1:
        raise DomainError("nu must lie in [0,1)")
    _grid_trend(phi, False, "phi")
    if isinstance(phi, PhiSpec):
        psi, chi = phi.times_theta(_frac1(nu)), (phi ** 0.5).times_theta(_frac1(nu))
    else:
        psi = lambda t: phi(t) * t ** (1 - nu)
        chi = lambda t: mpmath.sqrt(phi(t)) * t ** (1 - nu)
    _grid_trend(psi, True, "theta^(1-nu) phi")
    return _RotationEngine(psi, chi, WeightSpec.power(nu), phi, nu)


def _frac1(nu):
    from fractions import Fraction
    return 1 - Fraction(nu).limit_denominator(10**12)


def croft_engine(phi, nu):
    if not 0 <= nu < 1:
        raise DomainError("nu must lie in [0,1)")
    _grid_trend(phi, False, "phi")
    if isinstance(phi, PhiSpec):
        _grid_trend(phi.times_theta(_frac1(nu)), True, "theta^(1-nu) phi")
    else:
        _grid_trend(lambda t: phi(t) * t ** (1 - nu), True, "theta^(1-nu) phi")
    return _CroftEngine(phi, nu, WeightSpec.power(nu))


# --------------------------------------------------------------------------
# stage mechanics


def find_threshold(engine, P: ExpPolynomial, cfg: ConstructionConfig):
    """Largest grid theta below which the engine's threshold condition holds
    at every grid point, divided by the safety factor."""
    n = P.degree
    with mpmath.workprec(cfg.precision.search_prec):
        lo = _ctx_floor(cfg)
        grid = _log_grid(lo, mpmath.mpf(1), cfg.grid_points)
        ok = [bool(engine.cond0(n, t, P)) for t in grid]
        if not ok[0]:
            return None
        i = 0
        while i + 1 < len(ok) and ok[i + 1]:
            i += 1
        return grid[i] / cfg.safety, grid


def _bracket_and_solve(engine, P, m, theta_hi, prec, cfg, floor):
    """Root of ``g(theta) = 0`` below ``theta_hi`` (where ``g >= 0``)."""
    with mpmath.workprec(prec):
        hi = mpmath.mpf(theta_hi)
        ghi = engine.g(P, m, hi)
        if ghi < 0:
            raise RootError(f"tau(theta_hi) > m={m}: not bracketed")
        lo = hi
        for _ in range(4000):
            lo = lo / 2
            if lo < floor:
                raise RootError("bracket search ran below the precision floor")
            glo = engine.g(P, m, lo)
            if glo < 0:
                break
            hi, ghi = lo, glo
        else:
            raise RootError("no sign change found")
        if ghi == 0:
            return hi
        # bisection in log space to a coarse bracket, then Illinois
        for _ in range(60):
            mid = mpmath.sqrt(lo * hi)
            gm = engine.g(P, m, mid)
            if gm < 0:
                lo, glo = mid, gm
            else:
                hi, ghi = mid, gm
            if hi - lo <= hi * 2 ** -40:
                break
        side = 0
        tol = hi * mpmath.mpf(2) ** (8 - prec)
        for _ in range(400):
            x = (lo * ghi - hi * glo) / (ghi - glo)
            gx = engine.g(P, m, x)
            if gx == 0:
                return x
            if gx < 0:
                lo, glo = x, gx
                if side == -1:
                    ghi /= 2
                side = -1
            else:
                hi, ghi = x, gx
                if side == 1:
                    glo /= 2
                side = 1
            if hi - lo <= tol:
                break
        x = (lo * ghi - hi * glo) / (ghi - glo)
        if not lo <= x <= hi:
            x = (lo + hi) / 2
        return x


@dataclass
class Stage:
    """One accepted stage; ``poly`` is the polynomial after the stage."""

    m: int
    theta: object
    window: FlatWindow
    center_value: object
    center_bound: object
    norm_gap: object
    gap_bound: object
    delta: object
    poly: ExpPolynomial
    prec: int
    extra: dict = field(default_factory=dict)
    certificate: WindowCertificate | None = None


def _make_stage(engine, P, m, theta_hi, prec, cfg, delta=None):
    floor = _ctx_floor(cfg)
    theta = _bracket_and_solve(engine, P, m, theta_hi, prec, cfg, floor)
    with mpmath.workprec(prec):
        if theta < floor:
            raise RootError("flat point fell below the precision floor")
        Q, extra = engine.build(P, m, theta, prec)
        hw, bound, cbound = engine.window(theta)
        center, im = _abs_one_minus(Q, theta, prec)
        extra["imag_residual"] = im
        gap = norm_distance(P, Q, engine.weight)
        win = FlatWindow(theta, hw, bound, m)
        return Stage(m, theta, win, center, cbound, gap, engine.gap_bound(theta),
                     delta, Q, prec, extra)


def _check_resolvable(st: Stage, stage_no: int):
    """The window bound must sit well above the rounding level of the stage."""
    with mpmath.workprec(st.prec):
        if st.window.bound / 10 < mpmath.mpf(2) ** (24 - st.prec):
            raise PrecisionExhausted(
                stage_no, f"window bound {mpmath.nstr(st.window.bound, 3)} is below the "
                f"resolution of {st.prec}-bit arithmetic")


def _consecutive_stages(engine, P, M, cfg):
    P = as_poly(P)
    if P.mode != "integer":
        raise DomainError("constructions start from integer-frequency polynomials")
    if not is_aperiodic(P):
        raise PreconditionError("starting polynomial must be aperiodic")
    found = find_threshold(engine, P, cfg)
    if found is None:
        raise PrecisionExhausted(1, "threshold condition fails down to the precision floor")
    theta0, _ = found
    prec = cfg.precision.stage_prec(theta0 / 8)
    if prec > cfg.precision.bits:
        raise PrecisionExhausted(1, f"needs {prec} bits, cap is {cfg.precision.bits}")
    with mpmath.workprec(prec):
        Pm = P.with_prec(prec)
        t = engine.tau(Pm, mpmath.mpf(theta0))
        if not mpmath.isfinite(t):
            raise CertificationError("tau undefined at the threshold")
        m0 = max(int(mpmath.ceil(t)), P.degree)
    out = []
    for j in range(M):
        st = _make_stage(engine, Pm, m0 + j, theta0, prec, cfg)
        _check_resolvable(st, j + 1)
        out.append(st)
    for st in out:
        st.certificate = certify_window(st.poly, st.theta, st.window.half_width,
                                        samples=cfg.samples, prec=prec)
    return out


def spread_sequence(P, psi, chi, M: int, cfg: ConstructionConfig | None = None) -> list:
    """``M`` consecutive flat windows for ``gamma = sqrt(psi chi)``.

    Each stage satisfies ``m theta_m <= 2 pi``, ``|1-Q(theta_m)| <= 2 psi theta_m``,
    and the window of half-width ``psi chi theta_m`` carries the certified bound
    ``10 psi theta_m``.
    """
    cfg = cfg or ConstructionConfig()
    _grid_trend(psi, True, "psi")
    if isinstance(psi, PhiSpec) and isinstance(chi, PhiSpec):
        ratio = PhiSpec(chi.coef / psi.coef, chi.theta_pow - psi.theta_pow, chi.log_pow - psi.log_pow)
        _grid_trend(ratio, True, "chi/psi")
    else:
        _grid_trend(lambda t: chi(t) / psi(t), True, "chi/psi")
    eng = _RotationEngine(psi, chi, WeightSpec.power(0))
    return _consecutive_stages(eng, P, M, cfg)


def power_weight_spread(P, phi, nu, M: int, cfg: ConstructionConfig | None = None) -> list:
    """Spread with ``psi = phi theta^{1-nu}``, ``chi = phi^{1/2} theta^{1-nu}``.

    Norm gaps are measured in ``A(nu)`` and bounded by ``2 (2pi)^nu / phi^{1/2}``.
    """
    cfg = cfg or ConstructionConfig()
    return _consecutive_stages(corcos_engine(phi, nu), P, M, cfg)


def croft_alternative(P, phi, nu, M: int, cfg: ConstructionConfig | None = None) -> list:
    """Flat windows with an integer frequency ``m`` chosen so ``Im Q_m(theta_m) = 0``."""
    cfg = cfg or ConstructionConfig()
    return _consecutive_stages(croft_engine(phi, nu), P, M, cfg)


# --------------------------------------------------------------------------
# iterative construction


@dataclass
class ConstructionTrace:
    engine: str
    params: dict
    initial: ExpPolynomial
    stages: list = field(default_factory=list)
    schedule: list = field(default_factory=list)
    exhausted: dict | None = None

    @property
    def final(self) -> ExpPolynomial:
        return self.stages[-1].poly if self.stages else self.initial

    @property
    def prec(self) -> int:
        return max([s.prec for s in self.stages] + [self.initial.prec, 53])

    @property
    def windows(self) -> list:
        return [s.window for s in self.stages]


def _window_factor(delta, M):
    return 10 + delta * sum(mpmath.mpf(2) ** -j for j in range(1, M))


def _gauge(engine, theta):
    """``phi(theta) theta^{2-nu}``: one tenth of the window bound."""
    return engine.window(theta)[1] / 10


def _next_delta(N, eps, delta, stages, engine):
    """Tolerance for stage ``N+1`` (``N`` stages done)."""
    if N == 0:
        return min(mpmath.mpf(delta) / 2, mpmath.mpf(eps) / 2)
    k = mpmath.mpf(2) ** (N + 1)
    gmin = min(_gauge(engine, s.theta) for s in stages)
    return min(mpmath.mpf(eps) / k, mpmath.mpf(delta) / k * gmin)


def _iterative_stage(engine, P, target, cfg, stage_no):
    found = find_threshold(engine, P, cfg)
    if found is None:
        raise PrecisionExhausted(stage_no, "threshold condition fails down to the precision floor")
    theta0, grid = found
    with mpmath.workprec(cfg.precision.search_prec):
        pnorm = sum((engine.weight(k) * a for k, a in P.terms), mpmath.mpf(0))
        best = None
        for t in reversed(grid):
            if t > theta0:
                continue
            if engine.predicted_gap(P, t, pnorm) <= target / 2:
                best = t
                break
    if best is None:
        raise PrecisionExhausted(stage_no, f"cannot reach gap {mpmath.nstr(target, 5)} above the floor")
    prec = cfg.precision.stage_prec(best / 64)
    if prec > cfg.precision.bits:
        raise PrecisionExhausted(stage_no, f"needs about {prec} bits, cap is {cfg.precision.bits}")
    with mpmath.workprec(prec):
        Pm = P.with_prec(prec)
        t = engine.tau(Pm, mpmath.mpf(best))
        if not mpmath.isfinite(t):
            raise CertificationError("tau undefined at the chosen flat point")
        m = max(int(mpmath.ceil(t)), P.degree + 1)
    for _ in range(cfg.max_retries):
        st = _make_stage(engine, Pm, m, best, prec, cfg, target)
        _check_resolvable(st, stage_no)
        if st.norm_gap <= target:
            return st
        m *= 2
    raise PrecisionExhausted(stage_no, "norm gap target not met after retries")


def iterative_counterexample(f0, eps, delta, phi, nu, M: int,
                             cfg: ConstructionConfig | None = None,
                             engine: str = "rotation") -> ConstructionTrace:
    """Stage-by-stage induction: each stage adds one frequency with a flat
    window and perturbs the earlier windows by at most their share of ``delta``.

    Raises :class:`PrecisionExhausted` carrying the partial trace when a
    stage would need more precision than configured.
    """
    cfg = cfg or ConstructionConfig()
    if not 0 < eps < 1:
        raise DomainError("eps must lie in (0,1)")
    if not delta > 0:
        raise DomainError("delta must be positive")
    eng = corcos_engine(phi, nu) if engine == "rotation" else croft_engine(phi, nu)
    P = as_poly(f0)
    if P.mode != "integer" or not is_aperiodic(P):
        raise PreconditionError("f0 must be an aperiodic integer-frequency polynomial")
    trace = ConstructionTrace(eng.name, {"eps": eps, "delta": delta, "phi": str(phi),
                                         "nu": nu, "M": M, "precision": str(cfg.precision),
                                         "kind": "iterative"}, P)
    for N in range(M):
        with mpmath.workprec(max(trace.prec, cfg.precision.search_prec)):
            target = _next_delta(N, eps, delta, trace.stages, eng)
        try:
            st = _iterative_stage(eng, trace.final, target, cfg, N + 1)
        except (PrecisionExhausted, RootError) as exc:
            trace.exhausted = {"stage": N + 1, "reason": str(exc)}
            raise PrecisionExhausted(N + 1, str(exc).split(": ", 1)[-1], trace) from exc
        trace.schedule.append(target)
        trace.stages.append(st)
    return trace


def certify_trace(trace: ConstructionTrace, samples: int = 201) -> list:
    """Re-verify every claim a trace makes from the trace alone."""
    out = []
    P = trace.final
    M = len(trace.stages)
    prec = trace.prec
    eps = trace.params.get("eps")
    delta = trace.params.get("delta")
    kind = trace.params.get("kind", "iterative")
    w = _trace_weight(trace)
    with mpmath.workprec(prec):
        prev = trace.initial
        for j, st in enumerate(trace.stages):
            gap = norm_distance(prev, st.poly, w)
            out.append(check(f"{trace.engine}-stage-gap", gap, st.delta, 0, {"stage": j + 1}))
            prev = st.poly
        if eps is not None:
            total = sum(trace.schedule, mpmath.mpf(0))
            out.append(check("delta-schedule-sum", total, eps, 0))
            out.append(check("total-distance", norm_distance(trace.initial, P, w), eps, 0))
        for j, st in enumerate(trace.stages):
            out.append(check("frequency-times-theta", st.m * st.theta, 2 * mpmath.pi, 0,
                             {"stage": j + 1}))
        if kind == "betak":
            ratios = []
            for j, st in enumerate(trace.stages):
                val, _ = _abs_one_minus(P, st.theta, prec)
                ratios.append(val / st.theta)
                out.append(check("betak-ratio", val / st.theta, 2 * st.extra["ratio_bound"], 0,
                                 {"stage": j + 1}))
        else:
            factor = _window_factor(delta, M)
            ratios = []
            for j, st in enumerate(trace.stages):
                win = st.window
                cert = certify_window(P, st.theta, win.half_width, cutoff=st.m,
                                      samples=samples, prec=st.prec)
                gauge = win.bound / 10
                out.append(check(f"{trace.engine}-window", cert.certified, factor * gauge, 0,
                                 {"stage": j + 1}, sampled_max=cert.sampled_max,
                                 factor=factor))
                val, _ = _abs_one_minus(P, st.theta, prec)
                ratios.append(val / st.theta)
        dec = all(b < a for a, b in zip(ratios, ratios[1:]))
        out.append(VerificationReport("ratio-decreasing", {"stages": M}, ratios, None, dec))
    return out


def croft_stage_checks(stages) -> list:
    """Per stage: ``|Im Q_m(theta_m)| <= 1e-10`` and ``m theta_m`` in ``(3pi/2, 2pi]``."""
    out = []
    for j, st in enumerate(stages):
        with mpmath.workprec(st.prec):
            im = abs(st.extra.get("imag_residual", mpmath.mpf(0)))
            x = st.m * st.theta
            lo, hi = 3 * mpmath.pi / 2, 2 * mpmath.pi
        out.append(check("croft-imag-residual", im, 1e-10, 0, {"stage": j + 1}))
        out.append(VerificationReport("croft-frequency-range", {"stage": j + 1}, x, [lo, hi],
                                      bool(lo < x <= hi)))
    return out


def _trace_weight(trace):
    if trace.params.get("kind") == "betak":
        seq = trace.params["eps_seq_handle"]
        return WeightSpec.general(lambda k: seq(mpmath.mpf(k)))
    return WeightSpec.power(trace.params.get("nu", 0))


def trace_ratios(trace: ConstructionTrace) -> list:
    """``|1 - P_M(theta_m)| / theta_m`` across the stages."""
    with mpmath.workprec(trace.prec):
        return [_abs_one_minus(trace.final, s.theta, trace.prec)[0] / s.theta
                for s in trace.stages]


# --------------------------------------------------------------------------
# weighted sequences with vanishing liminf


@dataclass(frozen=True)
class FlatPoint:
    theta: object
    Q: ExpPolynomial
    ratio: object
    norm_gap: object
    gamma: object
    s: int
    ratio_bound: object
    gap_bound: object


def _check_eps_seq(eps_seq, label="eps"):
    with mpmath.workprec(SEARCH_PREC):
        ks = sorted({max(1, int(mpmath.nint(mpmath.mpf(10) ** (6 * j / 999)))) for j in range(1000)})
        vals = [eps_seq(mpmath.mpf(k)) for k in ks]
    for k, v in zip(ks, vals):
        if not v > 0:
            raise PreconditionError(f"{label} must be positive (k={k})")
        if k * v < 1 - 1e-12:
            raise PreconditionError(f"k*{label}_k = {k * v} < 1 at k={k}")
    if not min(vals[-100:]) <= 0.5 * vals[0]:
        raise SubsequenceNotFound(f"{label} shows no vanishing subsequence on [1, 1e6]")
    return ks, vals


def _sup_eps(eps_seq, n, support=()):
    """``sup {eps_k : k <= n}`` over the integers up to ``min(n, 10^4)``, a log
    grid up to ``n`` and the support."""
    ks = set(range(1, min(n, 10_000) + 1)) | {k for k in support if k <= n}
    if n > 10_000:
        L = mpmath.log(n)
        ks |= {int(mpmath.exp(L * j / 400)) for j in range(401)}
    return max(eps_seq(mpmath.mpf(k)) for k in ks if 1 <= k <= n)


def _betak_point(P, s, eps_seq, en, prec):
    n = P.degree
    with mpmath.workprec(prec):
        es = eps_seq(mpmath.mpf(s))
        gam = mpmath.sqrt(es + n * en / s)
        if gam > 1:
            return None
        theta = (2 * mpmath.pi - gam) / s
        d, Q = _integer_rotation(P, theta, s, gam, prec)
        return gam, theta, d, Q


def flat_point_sequence(P, eps_seq, M: int, cfg: ConstructionConfig | None = None,
                        scan_limit: int = 10**6) -> list:
    """Points ``theta_m`` where a one-term rotation of ``P`` satisfies
    ``|1 - Q_m(theta_m)| / theta_m <= 2 n gamma_m``.

    ``s_m`` is the smallest admissible index (``s > 2 pi n``,
    ``gamma_m <= 1``) whose ``eps`` lies strictly below all earlier picks.
    """
    cfg = cfg or ConstructionConfig()
    P = as_poly(P)
    if P.mode != "integer" or not is_aperiodic(P):
        raise PreconditionError("P must be an aperiodic integer-frequency polynomial")
    n = P.degree
    w = WeightSpec.general(lambda k: eps_seq(mpmath.mpf(k)))
    with mpmath.workprec(SEARCH_PREC):
        en = _sup_eps(eps_seq, n, P.freqs)
    out = []
    s = int(math.floor(TWO_PI * n)) + 1
    run_min = mpmath.inf
    while len(out) < M:
        if s > scan_limit:
            raise SubsequenceNotFound(f"fewer than {M} admissible indices below {scan_limit}")
        with mpmath.workprec(SEARCH_PREC):
            es = eps_seq(mpmath.mpf(s))
            ok = es < run_min and es + n * en / s <= 1
        if not ok:
            s += 1
            continue
        prec = max(cfg.precision.stage_prec(mpmath.mpf(TWO_PI) / s), 53)
        gam, theta, d, Q = _betak_point(P.with_prec(prec), s, eps_seq, en, prec)
        with mpmath.workprec(prec):
            val, _ = _abs_one_minus(Q, theta, prec)
            gap = norm_distance(P, Q, w)
            out.append(FlatPoint(theta, Q, val / theta, gap, gam, s, 2 * n * gam,
                                 4 * mpmath.pi * n * gam))
        run_min = es
        s += 1
    return out


def betak_counterexample(f0, eps, eps_seq, M: int,
                         cfg: ConstructionConfig | None = None) -> ConstructionTrace:
    """Inductive version of the vanishing-ratio construction in ``A(k eps_k)``.

    Stage ``N+1`` rotates ``P_N`` onto a new frequency ``s`` chosen so that the
    norm gap is at most ``delta_{N+1} = 2^{-(N+1)} min(eps, min_m theta_m rho_m)``
    and the flat-point ratio ``rho_{N+1}`` is at most ``rho_N / 8``.
    """
    cfg = cfg or ConstructionConfig()
    if not 0 < eps < 1:
        raise DomainError("eps must lie in (0,1)")
    _check_eps_seq(eps_seq)
    P = as_poly(f0)
    if P.mode != "integer" or not is_aperiodic(P):
        raise PreconditionError("f0 must be an aperiodic integer-frequency polynomial")
    w = WeightSpec.general(lambda k: eps_seq(mpmath.mpf(k)))
    trace = ConstructionTrace("betak", {"eps": eps, "M": M, "precision": str(cfg.precision),
                                        "kind": "betak", "eps_seq_handle": eps_seq}, P)
    emax = int((cfg.precision.bits - 128) / 2.5) if cfg.precision.mode == "extended" else 40
    for N in range(M):
        cur = trace.final
        try:
            st = _betak_stage(cur, N, eps, eps_seq, w, trace, emax, cfg)
        except PrecisionExhausted as exc:
            trace.exhausted = {"stage": N + 1, "reason": str(exc)}
            raise PrecisionExhausted(N + 1, str(exc).split(": ", 1)[-1], trace) from exc
        trace.schedule.append(st.delta)
        trace.stages.append(st)
    return trace


def _betak_stage(P, N, eps, eps_seq, w, trace, emax, cfg):
    stage_no = N + 1
    n = P.degree
    with mpmath.workprec(SEARCH_PREC):
        en = _sup_eps(eps_seq, n, P.freqs)
        if N == 0:
            target = mpmath.mpf(eps) / 2
            rho_t = mpmath.inf
        else:
            k = mpmath.mpf(2) ** (N + 1)
            target = min(mpmath.mpf(eps) / k,
                         min(s.theta * s.extra["ratio"] for s in trace.stages) / k)
            rho_t = trace.stages[-1].extra["ratio"] / 8
        pnorm = sum((w(k) * a for k, a in P.terms), mpmath.mpf(0))

        def ok(e):
            s = int(mpmath.ceil(mpmath.mpf(2) ** e))
            if s <= 2 * mpmath.pi * n:
                return False
            es = eps_seq(mpmath.mpf(s))
            gam2 = es + n * en / s
            if gam2 > 1:
                return False
            gam = mpmath.sqrt(gam2)
            theta = (2 * mpmath.pi - gam) / s
            d = _rotation_weight(P, theta, gam)
            gap = d / (1 + d) * (pnorm + s * es)
            if gap > target / 2:
                return False
            if mpmath.isinf(rho_t):
                return True
            num = sum(a * _one_minus_pair(k * theta, gam, croft_coefficient(k * theta, gam, False))
                      for k, a in P.terms)
            return abs(num) / (1 + d) / theta <= rho_t / 2

        e_lo = mpmath.log(2 * mpmath.pi * n + 1, 2)
        e_hi = e_lo
        while not ok(e_hi):
            e_lo = e_hi
            e_hi = e_hi * 2 if e_hi > 1 else 2
            if e_hi > emax:
                if ok(emax):
                    e_hi = mpmath.mpf(emax)
                    break
                raise PrecisionExhausted(stage_no, "required frequency exceeds the precision cap")
        for _ in range(40):
            mid = (e_lo + e_hi) / 2
            if ok(mid):
                e_hi = mid
            else:
                e_lo = mid
        s = int(mpmath.ceil(mpmath.mpf(2) ** e_hi))
    with mpmath.workprec(SEARCH_PREC):
        prec = cfg.precision.stage_prec(2 * mpmath.pi / s / 64)
    if prec > cfg.precision.bits:
        raise PrecisionExhausted(stage_no, f"needs {prec} bits, cap is {cfg.precision.bits}")
    if cfg.precision.mode == "binary64" and mpmath.mpf(TWO_PI) / s < cfg.precision.binary64_floor:
        raise PrecisionExhausted(stage_no, "flat point below the binary64 floor")
    for _ in range(cfg.max_retries):
        res = _betak_point(P.with_prec(prec), s, eps_seq, en, prec)
        if res is None:
            s *= 2
            continue
        gam, theta, d, Q = res
        with mpmath.workprec(prec):
            val, im = _abs_one_minus(Q, theta, prec)
            gap = norm_distance(P, Q, w)
            ratio = val / theta
            if gap <= target:
                rb = 2 * n * gam
                win = FlatWindow(theta, mpmath.mpf(0), rb * theta, s)
                return Stage(s, theta, win, val, rb * theta, gap, 4 * mpmath.pi * n * gam,
                             target, Q, prec, {"gamma": gam, "d": d, "ratio": ratio,
                                               "ratio_bound": rb, "e_n": en})
        s *= 2
    raise PrecisionExhausted(stage_no, "norm gap target not met after retries")


def _one_minus_pair(lam, gam, d):
    """``(1 - e^{i lam}) + d (1 - e^{-i gam})`` as an mpc."""
    re = 2 * mpmath.sin(lam / 2) ** 2 + d * 2 * mpmath.sin(gam / 2) ** 2
    im = -mpmath.sin(lam) + d * mpmath.sin(gam)
    return mpmath.mpc(re, im)


# --------------------------------------------------------------------------
# serialisation


def trace_to_record(trace: ConstructionTrace) -> dict:
    from .serialize import encode_number
    prec = trace.prec
    params = {k: v for k, v in trace.params.items() if k != "eps_seq_handle"}
    return {
        "engine": trace.engine,
        "params": {k: (_enc(v, prec) if isinstance(v, (float, mpmath.mpf)) else v)
                   for k, v in params.items()},
        "prec": prec,
        "initial": _poly_record(trace.initial, prec),
        "schedule": [_enc(x, prec) for x in trace.schedule],
        "stages": [_stage_record(s, prec) for s in trace.stages],
        "final": _poly_record(trace.final, prec),
        "exhausted": trace.exhausted,
    }


def _poly_record(p: ExpPolynomial, prec):
    return {"mode": p.mode, "prec": prec,
            "terms": [[k, _enc(a, prec)] for k, a in p.terms]}


def _stage_record(s: Stage, prec):
    extra = {k: _enc(v, prec) for k, v in s.extra.items()
             if isinstance(v, (int, float, mpmath.mpf))}
    return {
        "m": s.m, "theta": _enc(s.theta, prec), "prec": s.prec,
        "half_width": _enc(s.window.half_width, prec), "bound": _enc(s.window.bound, prec),
        "center_value": _enc(s.center_value, prec), "center_bound": _enc(s.center_bound, prec),
        "norm_gap": _enc(s.norm_gap, prec), "gap_bound": _enc(s.gap_bound, prec),
        "delta": _enc(s.delta, prec) if s.delta is not None else None,
        "extra": extra,
        "poly": _poly_record(s.poly, prec),
    }


def trace_from_record(rec: dict, eps_seq=None) -> ConstructionTrace:
    from .serialize import decode_number
    try:
        prec = int(rec["prec"])
        with mpmath.workprec(prec):
            def num(v):
                return _dec(v, prec)

            def poly(r):
                return ExpPolynomial(tuple((int(k), num(a)) for k, a in r["terms"]),
                                     r.get("mode", "integer"), prec)

            params = dict(rec["params"])
            if params.get("kind") == "betak":
                if eps_seq is None:
                    raise DomainError("betak traces need the eps sequence to replay")
                params["eps_seq_handle"] = eps_seq
            tr = ConstructionTrace(rec["engine"], params, poly(rec["initial"]))
            tr.schedule = [num(x) for x in rec["schedule"]]
            for s in rec["stages"]:
                theta = num(s["theta"])
                win = FlatWindow(theta, num(s["half_width"]), num(s["bound"]), int(s["m"]))
                extra = {k: num(v) for k, v in s.get("extra", {}).items()}
                tr.stages.append(Stage(int(s["m"]), theta, win, num(s["center_value"]),
                                       num(s["center_bound"]), num(s["norm_gap"]),
                                       num(s["gap_bound"]),
                                       None if s["delta"] is None else num(s["delta"]),
                                       poly(s["poly"]), int(s["prec"]), extra))
            tr.exhausted = rec.get("exhausted")
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"malformed trace record: {exc}") from exc
    return tr


def _dec(v, prec):
    if isinstance(v, str):
        return mpmath.mpf(v)
    if isinstance(v, int):
        return mpmath.mpf(v)
    return mpmath.mpf(v)
