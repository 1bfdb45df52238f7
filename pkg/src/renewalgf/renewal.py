"""The renewal recurrence and diagnostics of the resulting sequence."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DomainError, PreconditionError
from .reports import VerificationReport, table_csv
from .seqcore import CoefficientSequence, is_aperiodic

EXACT_MAX_N = 200


@dataclass(frozen=True)
class RenewalSequence:
    b: tuple
    source: CoefficientSequence
    N: int
    exact: bool = False


@dataclass(frozen=True)
class DifferenceDiagnostics:
    abs_variation: tuple
    sq_variation: tuple
    hardy: tuple
    horizon: int
    blocks: list = field(default_factory=list)


def _coeffs(a: CoefficientSequence, N: int):
    for k, v in a.entries:
        if v < 0:
            raise DomainError(f"negative coefficient a_{k}")
    return [(k, v) for k, v in a.entries if k <= N]


def renewal_sequence(a: CoefficientSequence, N: int, exact: bool | None = None) -> RenewalSequence:
    """``b_0 = 1``, ``b_n = sum_{k<=n} a_k b_{n-k}``.

    With ``exact=True`` (default when every stored coefficient is a
    ``Fraction`` or int and ``N <= 200``) the recurrence is run on integers
    over a common denominator, giving exact rationals.
    """
    if N < 0:
        raise DomainError("horizon N must be >= 0")
    terms = _coeffs(a, N)
    if exact is None:
        exact = N <= EXACT_MAX_N and all(isinstance(v, (int, Fraction)) for _, v in terms)
    if exact:
        return RenewalSequence(tuple(_exact(terms, N)), a, N, True)
    if not terms:
        b = np.zeros(N + 1)
        b[0] = 1.0
        return RenewalSequence(tuple(b.tolist()), a, N, False)
    ks = np.array([k for k, _ in terms])
    vs = np.array([float(v) for _, v in terms])
    b = np.zeros(N + 1)
    b[0] = 1.0
    for n in range(1, N + 1):
        m = ks <= n
        b[n] = np.dot(vs[m], b[n - ks[m]])
    return RenewalSequence(tuple(b.tolist()), a, N, False)


def _exact(terms, N):
    # b_n = B_n / D^n with integer B, where D is the common denominator
    fr = [(k, Fraction(v)) for k, v in terms]
    D = math.lcm(*(v.denominator for _, v in fr)) if fr else 1
    c = [(k, int(v * D)) for k, v in fr]
    pw = [1]
    for _ in range(N):
        pw.append(pw[-1] * D)
    B = [1]
    for n in range(1, N + 1):
        s = 0
        for k, ck in c:
            if k > n:
                break
            s += ck * B[n - k] * pw[k - 1]
        B.append(s)
    return [Fraction(B[n], pw[n]) for n in range(N + 1)]


def verify_gf_identity(a: CoefficientSequence, b: RenewalSequence) -> VerificationReport:
    """Coefficients ``0..N`` of ``(1 - F) G`` must be ``1, 0, ..., 0``."""
    N = b.N
    if len(b.b) != N + 1:
        raise DomainError("renewal sequence length does not match its horizon")
    coeff = dict(a.entries)
    res_max = 0
    worst = 0
    for n in range(N + 1):
        s = b.b[n] - sum(coeff.get(k, 0) * b.b[n - k] for k in range(1, n + 1) if k in coeff)
        target = 1 if n == 0 else 0
        r = abs(s - target)
        if r > res_max:
            res_max, worst = r, n
    tol = 0 if b.exact else 1e-12
    return VerificationReport(
        "renewal-gf-identity", {"N": N, "exact": b.exact}, res_max, tol, res_max <= tol,
        meta={"worst_index": worst},
    )


def efp_diagnostic(a: CoefficientSequence, b: RenewalSequence) -> VerificationReport:
    """Measured gap ``|b_N - 1/mu|``; no convergence rate is asserted."""
    if not is_aperiodic(a):
        raise PreconditionError(
            "sequence is periodic (gcd of support > 1): b_n need not converge")
    if a.tail_mass:
        raise PreconditionError("mean is not determined by stored terms when tail_mass > 0")
    mu = sum(k * v for k, v in a.entries)
    bN = b.b[-1]
    gap = abs(bN - 1 / mu) if not isinstance(mu, float) else abs(float(bN) - 1.0 / mu)
    return VerificationReport(
        "erdos-feller-pollard", {"N": b.N}, gap, None, True,
        meta={"mu": mu, "b_N": bN, "limit": 1 / mu},
    )


def _blocks(delta_abs, delta_sq):
    out = []
    j = 0
    n = len(delta_abs)
    while (1 << j) < n:
        lo, hi = 1 << j, min(1 << (j + 1), n)
        out.append({"j": j, "start": lo, "stop": hi,
                    "abs": float(sum(delta_abs[lo:hi])),
                    "sq": float(sum(delta_sq[lo:hi]))})
        j += 1
    return out


def difference_diagnostics(b: RenewalSequence) -> DifferenceDiagnostics:
    """Partial sums of ``|b_k - b_{k+1}|``, ``(b_k - b_{k+1})^2`` and ``b_n / n``.

    ``blocks[j]`` sums the increments over ``k`` in ``[2^j, 2^{j+1})``.
    """
    if b.N < 1:
        raise DomainError("need N >= 1")
    x = np.array([float(v) for v in b.b])
    d = np.diff(x)
    ad = np.abs(d)
    sq = d * d
    hardy = np.cumsum(x[1:] / np.arange(1, b.N + 1))
    return DifferenceDiagnostics(
        tuple(np.cumsum(ad).tolist()), tuple(np.cumsum(sq).tolist()),
        tuple(hardy.tolist()), b.N, _blocks(ad, sq))


def renewal_csv(b: RenewalSequence) -> str:
    """Columns ``n, b_n, delta, abs_partial, sq_partial, hardy_partial``."""
    diag = difference_diagnostics(b) if b.N >= 1 else None
    rows = []
    for n in range(b.N + 1):
        if diag is None or n == b.N:
            delta = abs_p = sq_p = None
        else:
            delta = float(b.b[n + 1]) - float(b.b[n])
            abs_p, sq_p = diag.abs_variation[n], diag.sq_variation[n]
        hardy = diag.hardy[n - 1] if diag is not None and n >= 1 else 0.0
        rows.append([n, float(b.b[n]), delta, abs_p, sq_p, hardy])
    return table_csv(["n", "b_n", "delta", "abs_partial", "sq_partial", "hardy_partial"], rows)
