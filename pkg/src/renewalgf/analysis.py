"""Measure and L^p checks around ``R_f(theta) = theta / (1 - f(theta))``.

Everything here runs in binary64 except the dyadic condensation sums (integer
fixed point with directed rounding) and the window lower sums of a
construction trace (mpmath, since the windows sit far below double range).

Certified measures use a uniform midpoint grid and a Lipschitz constant: a cell
counts as inside the set when its sample clears the level by ``L*h/2`` plus a
roundoff allowance, as outside when it misses by the same margin, and as a
boundary cell otherwise.  ``lower`` counts inside cells, ``upper`` everything
that is not outside.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import gmpy2
import mpmath
import numpy as np

from .errors import DomainError, PoleError, PreconditionError, QuadratureError
from .reports import VerificationReport, check
from .seqcore import (POLE_TOL, CoefficientSequence, ExpPolynomial, WeightSpec, as_poly,
                      derivative_bound, is_aperiodic, moment_functionals, one_minus_eval,
                      weighted_norm)
from .seqcore import eval as f_eval

EPS = np.finfo(float).eps
QUAD_RTOL = 1e-8
QUAD_DEPTH = 40

# --------------------------------------------------------------------------
# adaptive Gauss-Kronrod (7-point Gauss embedded in 15-point Kronrod)

_XGK = np.array([0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                 0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                 0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                 0.207784955007898467600689403773245, 0.0])
_WGK = np.array([0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                 0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                 0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                 0.204432940075298892414161999234649, 0.209482141084727828012999174891714])
_WG = np.array([0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                0.381830050505118944950369775488975, 0.417959183673469387755102040816327])

_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])          # 15 nodes, ascending
_WK = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GAUSS_IDX = np.array([1, 3, 5, 7, 9, 11, 13])
_WG15 = np.concatenate([_WG[:-1], _WG[::-1]])


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error: float
    depth: int
    intervals: int
    converged: bool


def gauss_kronrod(func: Callable, a: float, b: float, rtol: float = QUAD_RTOL,
                  atol: float = 0.0, max_depth: int = QUAD_DEPTH,
                  max_intervals: int = 1 << 15) -> QuadratureResult:
    """Adaptive G7K15 on ``[a, b]``; ``func`` maps an array of nodes to values.

    All intervals of one bisection level are evaluated in a single call.  An
    interval is accepted once ``|K15 - G7|`` is below its length-proportional
    share of ``max(atol, rtol * |estimate|)``, or all at once when the summed
    error estimate is already below that tolerance.
    """
    if not b > a:
        return QuadratureResult(0.0, 0.0, 0, 0, True)
    lo = np.array([a], dtype=float)
    hi = np.array([b], dtype=float)
    done_val = 0.0
    done_err = 0.0
    depth = 0
    count = 0
    converged = True
    while lo.size:
        c = 0.5 * (lo + hi)
        h = 0.5 * (hi - lo)
        x = c[:, None] + h[:, None] * _NODES[None, :]
        y = np.asarray(func(x.ravel()), dtype=float).reshape(x.shape)
        if not np.all(np.isfinite(y)):
            raise PoleError(float(x.ravel()[~np.isfinite(y.ravel())][0]),
                            "integrand is not finite at a quadrature node")
        k = h * (y @ _WK)
        g = h * (y[:, _GAUSS_IDX] @ _WG15)
        err = np.abs(k - g)
        count += lo.size
        est = done_val + k.sum()
        tol = max(atol, rtol * abs(est))
        ok = err <= tol * (hi - lo) / (b - a)
        if done_err + err.sum() <= tol:
            ok[:] = True
        last = depth >= max_depth or 2 * np.count_nonzero(~ok) > max_intervals
        if last and not ok.all():
            converged = False
            ok[:] = True
        done_val += k[ok].sum()
        done_err += err[ok].sum()
        lo, hi = lo[~ok], hi[~ok]
        mid = 0.5 * (lo + hi)
        lo, hi = np.concatenate([lo, mid]), np.concatenate([mid, hi])
        depth += 1
    return QuadratureResult(float(done_val), float(done_err), depth - 1, count, converged)


# --------------------------------------------------------------------------
# certified measures on a grid


@dataclass(frozen=True)
class CertifiedMeasure:
    lower: float
    upper: float
    grid_points: int
    lipschitz: float
    boundary_cells: int = 0
    sampled: float = 0.0

    def __post_init__(self):
        if self.lower > self.upper:
            raise DomainError("lower measure exceeds upper measure")

    def to_record(self) -> dict:
        return {"lower": self.lower, "upper": self.upper, "grid_points": self.grid_points,
                "lipschitz": self.lipschitz, "boundary_cells": self.boundary_cells,
                "sampled": self.sampled}


def _midpoints(a, b, n):
    h = (b - a) / n
    return a + h * (np.arange(n) + 0.5), h


def _certify(values, level, margin, h, above: bool, n, L=0.0) -> CertifiedMeasure:
    """Cells where ``values >= level`` (above) or ``values <= level``;
    ``margin`` bounds the variation of the sampled function over each cell."""
    if above:
        inside = values - margin >= level
        outside = values + margin < level
        hit = values >= level
    else:
        inside = values + margin <= level
        outside = values - margin > level
        hit = values <= level
    n_in = int(np.count_nonzero(inside))
    n_out = int(np.count_nonzero(outside))
    return CertifiedMeasure(n_in * h, (n - n_out) * h, n, float(L), n - n_in - n_out,
                            int(np.count_nonzero(hit)) * h)


def _cell_margin(p: ExpPolynomial, theta, h, phases=None, real=False):
    """Per-cell bound on the variation of ``Re f`` (``real=True``) or ``|1 - f|``
    around a midpoint.

    The derivative ``D`` is ``|Re f'|`` or at most ``|f'|`` respectively, and
    ``D(t) <= D(c) + L2 |t - c|`` with ``L2 = sum mu^2 a``, so the half-cell
    variation is at most ``D(c) h/2 + L2 h^2/8``; it is capped by ``L h/2``.
    """
    mu = np.array([float(l) for l in p.freqs])
    a = np.array([float(w) for w in p.weights])
    L = float(mu @ a)
    L2 = float((mu * mu) @ a)
    if phases is None:
        # f' equals i times the series with weights mu a
        d = f_eval(ExpPolynomial(tuple((l, float(l) * float(w)) for l, w in p.terms), p.mode), theta)
        slope = np.abs(d.imag if real else d)
        slope += 8 * EPS * L * (len(mu) + 1)
        local = slope * (h / 2) + L2 * h * h / 8
        return np.minimum(local, L * h / 2) + _roundoff(p), L
    al = np.array([float(x) for x in phases])
    slope = np.empty_like(theta)
    step = max(1, (1 << 20) // max(1, len(mu)))
    for s in range(0, theta.size, step):
        arg = np.multiply.outer(theta[s:s + step], mu) + al
        if real:
            slope[s:s + step] = np.abs(np.sin(arg) @ (mu * a))
        else:
            slope[s:s + step] = np.abs(np.exp(1j * arg) @ (mu * a))
    slope += 8 * EPS * L * (len(mu) + 1)
    local = slope * (h / 2) + L2 * h * h / 8
    return np.minimum(local, L * h / 2) + _roundoff(p), L


def _real_part(p: ExpPolynomial, theta, phases):
    if phases is None:
        return np.real(f_eval(p, theta))
    if len(phases) != len(p.terms):
        raise DomainError("need one phase per term")
    mu = np.array([float(l) for l in p.freqs])
    a = np.array([float(w) for w in p.weights])
    al = np.array([float(x) for x in phases])
    out = np.empty_like(theta)
    step = max(1, (1 << 20) // max(1, len(mu)))
    for s in range(0, theta.size, step):
        out[s:s + step] = np.cos(np.multiply.outer(theta[s:s + step], mu) + al) @ a
    return out


def _roundoff(p: ExpPolynomial) -> float:
    mass = float(sum(p.weights)) if p.terms else 0.0
    n = len(p.terms)
    deg = float(max((abs(l) for l in p.freqs), default=0))
    return 8 * EPS * mass * (n + min(deg, 4096.0) ** 2) + 4 * EPS * deg * math.pi


def superlevel_measure(f, eps, grid: int = 10**5, phases: Sequence | None = None):
    """Certified measure of ``{theta in [-pi, pi] : Re f(theta) >= 1 - eps}``.

    ``f`` is a normalised series ``sum a_k cos(mu_k theta + alpha_k)`` given by
    its terms and optional ``phases``.  Returns ``(CertifiedMeasure, report)``
    checking ``upper <= 4 pi sqrt(eps)``; a sequence of ``eps`` gives a list.
    """
    many = not np.isscalar(eps)
    levels = list(eps) if many else [eps]
    for e in levels:
        if not 0 < e <= 1:
            raise DomainError(f"eps must lie in (0,1], got {e!r}")
    if grid < 1000:
        raise DomainError("grid must have at least 1000 cells")
    p = as_poly(f)
    theta, h = _midpoints(-math.pi, math.pi, grid)
    values = _real_part(p, theta, phases)
    margin, L = _cell_margin(p, theta, h, phases, real=True)
    out = []
    for e in levels:
        cm = _certify(values, 1 - e, margin, h, True, grid, L)
        rep = check("littlewood-superlevel", cm.upper, 4 * math.pi * math.sqrt(e), 0.0,
                    {"eps": e, "grid": grid}, lower=cm.lower, sampled=cm.sampled,
                    boundary_cells=cm.boundary_cells)
        out.append((cm, rep))
    return out if many else out[0]


def sublevel_measure(f, eps, grid: int = 10**5):
    """Certified measure of ``E_eps = {theta in [-pi, pi] : |1 - f(theta)| <= eps}``.

    ``||1-f|'| <= |f'| <= sum |k| a_k`` supplies the Lipschitz constant.
    A sequence of ``eps`` gives a list.
    """
    many = not np.isscalar(eps)
    levels = list(eps) if many else [eps]
    if grid < 1000:
        raise DomainError("grid must have at least 1000 cells")
    p = as_poly(f)
    theta, h = _midpoints(-math.pi, math.pi, grid)
    values = np.abs(one_minus_eval(p, theta))
    margin, L = _cell_margin(p, theta, h)
    out = [_certify(values, e, margin, h, False, grid, L) for e in levels]
    return out if many else out[0]


def interval_mass_bound_check(E: Iterable, alpha=1.0, beta=0.0) -> list:
    """Measure of a union of intervals against its cosine mass.

    ``eps = int_E (1 - cos(alpha t + beta)) dt`` is computed in closed form; the
    general bound ``meas E <= (16 pi^2)^(1/3) eps^(1/3)`` is checked, and for
    ``alpha = 1, beta = 0`` also the sharper ``(4 pi^2)^(1/3) eps^(1/3)``.
    """
    if alpha < 1:
        raise DomainError("alpha must be >= 1")
    ivs = sorted((float(a), float(b)) for a, b in E)
    for a, b in ivs:
        if b < a:
            raise DomainError(f"interval [{a}, {b}] is reversed")
    for (a0, b0), (a1, b1) in zip(ivs, ivs[1:]):
        if a1 < b0:
            raise DomainError(f"intervals [{a0}, {b0}] and [{a1}, {b1}] overlap")
    if ivs and ivs[-1][1] - ivs[0][0] > 2 * math.pi * (1 + 1e-15):
        raise DomainError("intervals do not fit in one period window")
    with mpmath.workdps(40):
        al = mpmath.mpf(alpha)
        be = mpmath.mpf(beta)
        eps = mpmath.mpf(0)
        for a, b in ivs:
            a, b = mpmath.mpf(a), mpmath.mpf(b)
            eps += (b - a) - (mpmath.sin(al * b + be) - mpmath.sin(al * a + be)) / al
        meas = sum(b - a for a, b in ivs)
        third = mpmath.cbrt(eps)
        general = float(mpmath.cbrt(16 * mpmath.pi ** 2) * third)
        sharp = float(mpmath.cbrt(4 * mpmath.pi ** 2) * third)
    inputs = {"intervals": len(ivs), "alpha": alpha, "beta": beta}
    out = [check("cos-interval-mass", meas, general, 1e-12 * max(1.0, meas), inputs, eps=float(eps))]
    if alpha == 1 and beta == 0:
        out.append(check("cos-interval-mass-sharp", meas, sharp, 1e-12 * max(1.0, meas), inputs,
                         eps=float(eps)))
    return out


def _int_entries(f):
    if isinstance(f, CoefficientSequence):
        if f.tail_mass:
            raise DomainError("tail checks need every coefficient explicitly")
        return list(f.entries)
    p = as_poly(f)
    if p.mode != "integer":
        raise DomainError("integer frequencies required")
    return list(p.terms)


def sublevel_tail_check(tail, theta0: float, eps_grid: Iterable, grid: int = 10**4) -> list:
    """``meas{theta in [theta0, 2 theta0] : r - sum_{k>=m} a_k cos k theta <= eps}
    <= 4 pi theta0 sqrt(eps / r)`` for each ``eps`` in the grid."""
    entries = [(k, float(a)) for k, a in _int_entries(tail) if a > 0]
    if not entries:
        raise DomainError("tail mass r is zero")
    r = math.fsum(a for _, a in entries)
    if r > 1 + 1e-12:
        raise DomainError(f"tail mass {r} exceeds 1")
    m = entries[0][0]
    if not (0 < theta0 <= 1 and m * theta0 <= 1):
        raise PreconditionError(f"need theta0 in (0,1] with m*theta0 <= 1 (m={m})")
    k = np.array([e[0] for e in entries], dtype=float)
    a = np.array([e[1] for e in entries])
    theta, h = _midpoints(theta0, 2 * theta0, grid)
    values = np.empty_like(theta)
    step = max(1, (1 << 20) // len(k))
    for s in range(0, theta.size, step):
        values[s:s + step] = (2 * np.sin(0.5 * np.multiply.outer(theta[s:s + step], k)) ** 2) @ a
    L = float(k @ a)
    slack = 8 * EPS * (len(k) + 1) * (r + float(k.max()) * 2 * theta0)
    out = []
    for eps in eps_grid:
        if not 0 < eps <= r:
            raise DomainError(f"eps must lie in (0, r], got {eps!r}")
        cm = _certify(values, eps, L * h / 2 + slack, h, False, grid, L)
        cm = CertifiedMeasure(cm.lower, cm.upper, grid, L, cm.boundary_cells, cm.sampled)
        out.append(check("tail-sublevel", cm.upper, 4 * math.pi * theta0 * math.sqrt(eps / r), 0.0,
                         {"theta0": theta0, "eps": eps, "m": m, "r": r},
                         lower=cm.lower, boundary_cells=cm.boundary_cells))
    return out


def layer_cake_check(values, cell: float, eta: float, r: float, A: float, d: float, p: float,
                     t_points: int = 200) -> VerificationReport:
    """``int_Omega ds/(phi+d)^p <= meas/(r+d)^p + 2Ap/(eta^(p-1/2) sqrt r + d^p)``.

    ``values`` are samples of ``phi`` on cells of width ``cell`` covering
    ``Omega``.  The distribution hypothesis ``meas{phi <= t} <= A sqrt(t/r)`` is
    checked on the empirical distribution for ``t`` on a grid in ``[eta, r]``;
    when it or ``eta <= phi <= r`` fails the report says so instead of raising.
    """
    v = np.asarray(values, dtype=float)
    if not (r > eta > 0 and A > 0 and d >= 0 and p >= 1 and cell > 0):
        raise DomainError("need r > eta > 0, A > 0, d >= 0, p >= 1, cell > 0")
    meas = v.size * cell
    lhs = math.fsum(cell / (v + d) ** p)
    rhs = meas / (r + d) ** p + 2 * A * p / (eta ** (p - 0.5) * math.sqrt(r) + d ** p)
    ts = np.linspace(eta, r, t_points)
    srt = np.sort(v)
    dist = np.searchsorted(srt, ts, side="right") * cell
    cap = A * np.sqrt(ts / r)
    range_ok = bool(v.size == 0 or (v.min() >= eta * (1 - 1e-12) and v.max() <= r * (1 + 1e-12)))
    dist_ok = bool(np.all(dist <= cap * (1 + 1e-12)))
    inputs = {"eta": eta, "r": r, "A": A, "d": d, "p": p, "cells": int(v.size)}
    if not (range_ok and dist_ok):
        worst = float(np.max(dist - cap)) if ts.size else 0.0
        return VerificationReport("layer-cake", inputs, lhs, rhs, False, None, 0.0,
                                  {"hypothesis": "violated", "range_ok": range_ok,
                                   "distribution_ok": dist_ok, "worst_excess": worst})
    return check("layer-cake", lhs, rhs, 1e-12 * rhs, inputs, hypothesis="ok")


# --------------------------------------------------------------------------
# dyadic L^p integral of R_f


def cp_constant(p: float) -> float:
    return 3 * p * 2.0 ** (8 * p)


@dataclass
class DyadicLpReport:
    p: float
    theta0: float
    integral: float
    error: float
    rhs: float
    satisfied: bool
    tolerance: float = 0.0
    depth: int = 0
    converged: bool = True
    moments: dict = field(default_factory=dict)

    def to_report(self) -> VerificationReport:
        return VerificationReport("dyadic-lp-bound", {"p": self.p, "theta0": self.theta0},
                                  self.integral, self.rhs, self.satisfied, self.error,
                                  self.tolerance, {"depth": self.depth, "converged": self.converged,
                                                   **self.moments})

    def to_record(self) -> dict:
        return self.to_report().to_record()


def _check_poles(p: ExpPolynomial, a: float, b: float):
    """Raise when ``1 - f`` vanishes on ``[a, b]`` (periodic ``f``)."""
    if p.mode != "integer":
        return
    g = 0
    for k, w in p.terms:
        if w > 0:
            g = math.gcd(g, k)
    if g > 1:
        j = math.ceil(a * g / (2 * math.pi))
        if 2 * math.pi * j / g <= b and j != 0:
            raise PoleError(2 * math.pi * j / g, f"f has period 2pi/{g}; R_f has a pole in [{a}, {b}]")


def _abs_r_pow(p: ExpPolynomial, power: float):
    def fn(theta):
        om = np.abs(one_minus_eval(p, theta))
        if np.any(om <= POLE_TOL):
            raise PoleError(float(theta[om <= POLE_TOL][0]))
        return (np.abs(theta) / om) ** power
    return fn


def dyadic_lp_integral(f, p: float, theta0: float, rtol: float = QUAD_RTOL,
                       max_depth: int = QUAD_DEPTH) -> DyadicLpReport:
    """``int_{theta0}^{2 theta0} |R_f|^p`` against ``C_p {theta0/W^p + ...}``
    with ``C_p = 3p 2^(8p)``."""
    if p < 1:
        raise DomainError("p must be >= 1")
    if not 0 < theta0 <= 1:
        raise DomainError("theta0 must lie in (0,1]")
    poly = as_poly(f)
    mf = moment_functionals(f if isinstance(f, CoefficientSequence) else poly, theta0)
    r, W, U = float(mf.r), float(mf.W), float(mf.U)
    if not r < 1:
        raise PreconditionError(f"need r(theta0) < 1, got {r}")
    _check_poles(poly, theta0, 2 * theta0)
    q = gauss_kronrod(_abs_r_pow(poly, p), theta0, 2 * theta0, rtol=rtol, max_depth=max_depth)
    C = cp_constant(p)
    first = theta0 / W ** p
    if r == 0:
        second = 0.0
    else:
        second = theta0 ** (2 - p) * r ** (p - 1) / (W ** (2 * p - 1) + r ** (p - 1) * theta0 * U ** p)
    rhs = C * (first + second)
    ok = q.value <= rhs + q.error
    return DyadicLpReport(p, theta0, q.value, q.error, rhs, bool(ok), q.error, q.depth,
                          q.converged, {"r": r, "W": W, "U": U, "C_p": C})


# --------------------------------------------------------------------------
# series criteria


def log_power_family(eps: float, N: int = 4096) -> CoefficientSequence:
    """``a_k = c log^eps(k+1) / k^2`` stored for ``k <= N``, normalised, with the
    remaining mass recorded as the tail.

    The normalising sum is the exact head up to ``max(N, 2^16)`` plus the
    midpoint-rule tail integral, whose error is far below binary64 resolution.
    """
    K = max(N, 2 ** 16)
    k = np.arange(1, K + 1, dtype=float)
    terms = np.log1p(k) ** eps / k ** 2
    with mpmath.workdps(30):
        if eps == 0:
            total = mpmath.zeta(2)
        else:
            e = mpmath.mpf(eps)
            rest = mpmath.quad(lambda x: mpmath.log(x + 1) ** e / x ** 2, [K + 0.5, mpmath.inf])
            total = mpmath.fsum(terms.tolist()) + rest
        head = mpmath.fsum(terms[:N].tolist()) / total
        tail = float(1 - head)
    a = terms[:N] / float(total)
    return CoefficientSequence.from_weights(a.tolist(), tail_mass=tail)


def moment_arrays(f, N: int):
    """``(r_n, W_n, U_n)`` for ``n = 1..N`` as float arrays (index 0 is n = 1)."""
    if isinstance(f, CoefficientSequence):
        entries, tail, top = f.entries, float(f.tail_mass), f.support_max
    else:
        p = as_poly(f)
        if p.mode != "integer":
            raise DomainError("integer frequencies required")
        entries, tail, top = p.terms, 0.0, p.degree
    if tail and top < N:
        raise DomainError(f"stored support ends at {top} < N={N} while a tail is recorded")
    K = max(N, top)
    a = np.zeros(K + 1)
    for k, w in entries:
        a[k] = float(w)
    k = np.arange(K + 1, dtype=float)
    W = np.cumsum(k * a)
    U = np.cumsum(k * k * a)
    rev = np.cumsum(a[::-1])[::-1]                       # rev[n] = sum_{j >= n} a_j
    r = np.append(rev[1:], 0.0) + tail                   # r[n] = sum_{j > n} a_j + tail
    return r[1:N + 1], W[1:N + 1], U[1:N + 1]


def dyadic_increments(terms: np.ndarray, m0: int):
    """Sums of ``terms`` (indexed from ``n = m0``) over complete dyadic blocks
    ``[2^j, 2^(j+1))``; returns ``(js, increments)``."""
    N = m0 + len(terms) - 1
    js, inc = [], []
    j = max(0, m0.bit_length() - 1)
    while 2 ** (j + 1) - 1 <= N:
        lo, hi = max(2 ** j, m0), 2 ** (j + 1) - 1
        if lo <= hi:
            js.append(j)
            inc.append(math.fsum(terms[lo - m0:hi - m0 + 1]))
        j += 1
    return js, inc


def classify_growth(js: Sequence, inc: Sequence, window: int = 4) -> dict:
    """Verdict on a positive series from its last few block increments.

    ``converging`` when the last ``window`` increment ratios are all <= 1/2,
    the increments decay like ``j^-s`` with ``s >= 1.5``, or the series has
    terminated; ``diverging`` when the
    ratios are all >= 0.8 and ``s <= 1.2``; otherwise ``inconclusive``.
    """
    if len(inc) >= window + 1 and all(v == 0 for v in inc[-(window + 1):]):
        return {"verdict": "converging", "ratios": [], "exponent": None}
    pairs = [(j, v) for j, v in zip(js, inc) if v > 0 and j > 0]
    js = [j for j, _ in pairs]
    inc = [v for _, v in pairs]
    if len(inc) < window + 1:
        return {"verdict": "inconclusive", "ratios": [], "exponent": None}
    tail_inc = np.array(inc[-(window + 1):])
    ratios = (tail_inc[1:] / tail_inc[:-1]).tolist()
    x = np.log(np.array(js[-(window + 1):], dtype=float))
    y = np.log(tail_inc)
    s = float(-np.polyfit(x, y, 1)[0])
    if all(q <= 0.5 for q in ratios) or s >= 1.5:
        verdict = "converging"
    elif all(q >= 0.8 for q in ratios) and s <= 1.2:
        verdict = "diverging"
    else:
        verdict = "inconclusive"
    return {"verdict": verdict, "ratios": ratios, "exponent": s}


def l1_two_sided(f, m0: int, N: int, rtol: float = QUAD_RTOL) -> VerificationReport:
    """Both series of the two-sided L^1 criterion next to ``int_0^{1/m0} 1/|1-f|``.

    The constant linking them is not known explicitly, so no inequality between
    the three numbers is asserted.  The report is unsatisfied only when the
    verdicts contradict each other (lower series diverging while the upper one
    converges).
    """
    if m0 < 1 or N < m0:
        raise DomainError("need 1 <= m0 <= N")
    r, W, U = moment_arrays(f, N)
    if W[m0 - 1] <= 0:
        raise DomainError(f"W_{m0} = 0")
    n = np.arange(m0, N + 1, dtype=float)
    Wn, rn = W[m0 - 1:], r[m0 - 1:]
    lower_terms = 1.0 / (n * Wn + n * n * rn)
    upper_terms = 1.0 / (n * Wn)
    lj, linc = dyadic_increments(lower_terms, m0)
    uj, uinc = dyadic_increments(upper_terms, m0)
    lower = classify_growth(lj, linc)
    upper = classify_growth(uj, uinc)

    poly = as_poly(f)
    levels = max(1, int(math.floor(math.log2(N / m0))))
    _check_poles(poly, 1.0 / (m0 * 2 ** levels), 1.0 / m0)
    integrand = _abs_r_pow(poly, 1.0)
    contrib, errs = [], []
    for l in range(levels):
        a, b = 1.0 / (m0 * 2 ** (l + 1)), 1.0 / (m0 * 2 ** l)
        q = gauss_kronrod(lambda t: integrand(t) / t, a, b, rtol=rtol)
        contrib.append(q.value)
        errs.append(q.error)
    ljs = [l + m0.bit_length() for l in range(levels)]
    integral = classify_growth(ljs, contrib)
    ratios = [b / a for a, b in zip(contrib, contrib[1:])]
    contradiction = lower["verdict"] == "diverging" and upper["verdict"] == "converging"
    return VerificationReport(
        "l1-two-sided", {"m0": m0, "N": N},
        math.fsum(lower_terms), math.fsum(upper_terms), not contradiction, math.fsum(errs), 0.0,
        {"lower_verdict": lower["verdict"], "lower_ratios": lower["ratios"],
         "lower_exponent": lower["exponent"], "lower_blocks": linc,
         "upper_verdict": upper["verdict"], "upper_ratios": upper["ratios"],
         "upper_exponent": upper["exponent"], "upper_blocks": uinc,
         "integral": math.fsum(contrib), "integral_levels": contrib,
         "integral_ratios": ratios, "integral_verdict": integral["verdict"]})


# --------------------------------------------------------------------------
# dyadic condensation with rigorous fixed-point sums


def _as_fraction(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def _alpha_fraction(alpha) -> Fraction:
    if isinstance(alpha, float):
        return Fraction(alpha).limit_denominator(1000)
    return Fraction(alpha)


def _root_floor(x: int, b: int) -> int:
    if b == 1:
        return x
    if b == 2:
        return math.isqrt(x)
    return int(gmpy2.iroot(gmpy2.mpz(x), b)[0])


def _fixed(num: int, den: int, b: int, S: int) -> int:
    """``floor(2^S * (num/den)^(1/b))``; the true value lies below the result + 1."""
    return _root_floor((num << (S * b)) // den, b)


def dyadic_block_compare(q: Callable, alpha, m, N: int, scale_bits: int = 128) -> list:
    """Both condensation inequalities on truncations at ``2^N``.

    q(n) returns a positive rational (floats are taken at their exact binary
    value).  Each term of ``n^(alpha-1) q_n`` and ``2^(alpha n) q_(2^n)`` is
    enclosed between ``k 2^-S`` and ``(k+1) 2^-S`` by integer arithmetic, and the
    inequalities are decided on these enclosures, so a reported pass is a proof
    for the truncated sums.  ``alpha`` and ``m`` may be single values or lists;
    q is scanned once for all of them.
    """
    alphas = [_alpha_fraction(a) for a in (alpha if isinstance(alpha, (list, tuple)) else [alpha])]
    if min(alphas) < 0:
        raise DomainError("alpha must be >= 0")
    ms = [m] if isinstance(m, int) else list(m)
    if min(ms) < 1 or max(ms) > N:
        raise DomainError("need 1 <= m <= N")
    start = 2 ** (min(ms) - 1) + 1
    stop = 2 ** N
    vals = []
    pn, pd = None, None
    for n in range(start, stop + 1):
        v = _as_fraction(q(n))
        vn, vd = v.numerator, v.denominator
        if vn <= 0:
            raise DomainError(f"q_{n} must be positive")
        if pn is not None and vn * pd > pn * vd:
            raise DomainError(f"q is not decreasing at n={n}")
        pn, pd = vn, vd
        vals.append((vn, vd))
    out = []
    for al in alphas:
        out.extend(_condense(vals, start, stop, al, ms, N, scale_bits))
    return out


def _condense(vals, start, stop, al: Fraction, ms, N, S) -> list:
    a_, b_ = al.numerator, al.denominator
    e = a_ - b_
    pre_lo = [0]
    acc = 0
    for n, (vn, vd) in enumerate(vals, start):
        num, den = vn ** b_, vd ** b_
        if e >= 0:
            num *= n ** e
        else:
            den *= n ** (-e)
        acc += _fixed(num, den, b_, S)
        pre_lo.append(acc)

    def block(lo, hi):
        i, j = lo - start, hi - start + 1
        s = pre_lo[j] - pre_lo[i]
        return s, s + (j - i)

    out = []
    scale = mpmath.mpf(2) ** -S
    for mm in ms:
        mid_lo = 0
        for n in range(mm, N + 1):
            vn, vd = vals[2 ** n - start]
            mid_lo += _fixed(vn ** b_ * 2 ** (a_ * n), vd ** b_, b_, S)
        mid_hi = mid_lo + (N - mm + 1)
        left_lo, left_hi = block(2 ** mm, stop)
        right_lo, right_hi = block(2 ** (mm - 1) + 1, stop)
        # 2^-alpha left <= middle  <=>  left^b <= 2^a middle^b
        ok_left = left_hi ** b_ <= (2 ** a_) * mid_lo ** b_
        # middle <= 2^(1+alpha) right  <=>  middle^b <= 2^(b+a) right^b
        ok_right = mid_hi ** b_ <= 2 ** (b_ + a_) * right_lo ** b_
        with mpmath.workprec(S + 64):
            two_al = mpmath.mpf(2) ** (mpmath.mpf(a_) / b_)
            left = float(left_lo * scale / two_al)
            middle = float(mid_lo * scale)
            right = float(right_lo * scale * 2 * two_al)
            err = float(scale * (stop - start + 2))
        inputs = {"alpha": str(al), "m": mm, "N": N}
        out.append(VerificationReport("dyadic-condensation-lower", inputs, left, middle,
                                      bool(ok_left), err, 0.0, {"scale_bits": S}))
        out.append(VerificationReport("dyadic-condensation-upper", inputs, middle, right,
                                      bool(ok_right), err, 0.0, {"scale_bits": S}))
    return out


# --------------------------------------------------------------------------
# L^p membership criteria


def l2_certificate(f, rtol: float = QUAD_RTOL) -> VerificationReport:
    """``int_{-1/n0}^{1/n0} |R_f|^2 <= pi^3 / (a_{n0} n0^2)`` for the smallest
    support index ``n0``."""
    p = as_poly(f)
    sup = [(k, float(a)) for k, a in p.terms if a > 0]
    if not sup:
        raise DomainError("empty support")
    n0, a0 = sup[0]
    if p.mode != "integer":
        raise DomainError("integer frequencies required")
    q = gauss_kronrod(_abs_r_pow(p, 2.0), 0.0, 1.0 / n0, rtol=rtol)
    val = 2 * q.value
    bound = math.pi ** 3 / (a0 * n0 * n0)
    return check("l2-certificate", val, bound, 2 * q.error, {"n0": n0, "a_n0": a0},
                 error_estimate=2 * q.error, converged=q.converged)


def window_lower_sums(trace, p: float, nu=0) -> VerificationReport:
    """Per-window lower bounds ``h theta_m^p / B_m^p`` for ``int theta^p/|1-f|^p``
    over ``[theta_m, theta_m + h]``, where ``B_m`` is the certified sup of
    ``|1 - P_M|`` on the window of a construction trace."""
    from .construct import certify_window

    sums = []
    P = trace.final
    for st in trace.stages:
        win = st.window
        cert = certify_window(P, st.theta, win.half_width, cutoff=st.m, prec=st.prec)
        with mpmath.workprec(st.prec):
            t = mpmath.mpf(st.theta)
            sums.append(mpmath.mpf(win.half_width) * t ** p / cert.certified ** p)
    growing = all(b > a for a, b in zip(sums, sums[1:]))
    return VerificationReport("window-lp-lower-sums", {"p": p, "nu": nu, "stages": len(sums)},
                              sums, None, growing, None, 0.0, {})


def lp_criteria(f, nu=None, p=None, N: int = 4096, m0: int | None = None,
                trace=None) -> list:
    """Reports on L^p membership of ``R_f``.

    * for ``p > 2``: partial sums of the sufficient series over dyadic blocks;
    * for ``nu`` in (0,1): the exponent ``1 + 1/(1-nu)`` reached by A+(nu) and the
      stored ``A(nu)`` norm of ``f``;
    * always: the L^2 certificate near the origin;
    * with a construction ``trace``: per-window lower sums of the p-integral.
    """
    out = []
    if p is not None and p > 2:
        r, W, U = moment_arrays(f, N)
        start = m0 or next((i + 1 for i, w in enumerate(W) if w > 0), None)
        if start is None:
            raise DomainError("empty support")
        n = np.arange(start, N + 1, dtype=float)
        rn, Wn, Un = r[start - 1:], W[start - 1:], U[start - 1:]
        terms = n ** (p - 2) * rn ** (p - 1) / (n * Wn ** (2 * p - 1) + rn ** (p - 1) * Un ** p)
        js, inc = dyadic_increments(terms, start)
        g = classify_growth(js, inc)
        out.append(VerificationReport("lp-series-criterion", {"p": p, "m0": start, "N": N},
                                      math.fsum(terms), None, g["verdict"] != "diverging", None, 0.0,
                                      {"verdict": g["verdict"], "ratios": g["ratios"],
                                       "exponent": g["exponent"], "blocks": inc}))
    if nu is not None:
        if not 0 < nu < 1:
            raise DomainError("nu must lie in (0,1)")
        p_star = 1 + 1 / (1 - nu)
        norm = weighted_norm(as_poly(f), WeightSpec.power(Fraction(nu).limit_denominator(10**6)))
        fin = bool(mpmath.isfinite(norm)) if isinstance(norm, mpmath.mpf) else math.isfinite(norm)
        out.append(VerificationReport("lp-threshold", {"nu": nu}, norm, None, fin, None, 0.0,
                                      {"p_star": p_star}))
    out.append(l2_certificate(f))
    if trace is not None:
        if p is None:
            raise DomainError("window lower sums need p")
        out.append(window_lower_sums(trace, p, nu or 0))
    return out


# --------------------------------------------------------------------------
# measure of the near-one set against a per-f constant


def _singular_integral(fn: Callable, top: float, rtol: float, max_levels: int):
    """``int_0^top fn`` over dyadic pieces ``[top 2^-(l+1), top 2^-l]``.

    Stops once a level adds less than ``rtol`` of the total while the level
    contributions shrink geometrically; the geometric remainder is added and
    also counted as error.
    """
    total = 0.0
    err = 0.0
    prev = None
    for l in range(max_levels):
        q = gauss_kronrod(fn, top * 2.0 ** -(l + 1), top * 2.0 ** -l, rtol=rtol)
        total += q.value
        err += q.error
        if prev is not None and prev > 0:
            rho = q.value / prev
            if rho < 0.95 and q.value <= rtol * total:
                rest = q.value * rho / (1 - rho)
                return total + rest, err + rest, l
        prev = q.value
    raise QuadratureError(max_levels, "level contributions do not settle near theta = 0")


def epsilon_set_bound(f, alpha: float, gamma: float, eps_grid: Iterable, grid: int = 10**5,
                      rtol: float = QUAD_RTOL, max_levels: int = 400) -> list:
    """``meas{|1-f| <= eps} <= c_alpha(f) eps^alpha`` with the Hoelder constant
    ``c = (int |theta|^(g/a)/|1-f|)^a (int |theta|^(-g/(1-a)))^(1-a)``,
    both integrals over ``[-pi, pi]``."""
    if not 0 < alpha < 1:
        raise DomainError("alpha must lie in (0,1)")
    if not 0 < gamma < 1 - alpha:
        raise DomainError("gamma must lie in (0, 1 - alpha)")
    p = as_poly(f)
    if not is_aperiodic(p):
        raise PreconditionError("f must be aperiodic")
    one_minus = _abs_r_pow(p, 1.0)          # |theta| / |1 - f|
    s = gamma / alpha

    def fn(t):
        return one_minus(t) * t ** (s - 1)

    half, err, level = _singular_integral(fn, math.pi, rtol, max_levels)
    first = 2 * half
    k = gamma / (1 - alpha)
    second = 2 * math.pi ** (1 - k) / (1 - k)
    c = first ** alpha * second ** (1 - alpha)
    eps_list = list(eps_grid)
    measures = sublevel_measure(p, eps_list, grid)
    out = []
    for e, cm in zip(eps_list, measures):
        out.append(check("epsilon-set-bound", cm.upper, c * e ** alpha, 0.0,
                         {"alpha": alpha, "gamma": gamma, "eps": e},
                         c_alpha=c, lower=cm.lower, quad_level=level, quad_error=err))
    return out
