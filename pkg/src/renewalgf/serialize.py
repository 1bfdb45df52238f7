"""Number encoding for the structured text formats.

Floats go out as JSON numbers (``repr`` round-trips exactly); exact and
high-precision values go out as decimal strings:

* ``Fraction`` -> shortest exact decimal when the denominator is ``2^a 5^b``,
  otherwise ``"p/q"``;
* ``mpmath.mpf`` -> enough significant digits to reproduce the binary value at
  its working precision.
"""
from __future__ import annotations

import math
from fractions import Fraction

import mpmath


def _terminating_decimal(x: Fraction) -> str | None:
    den = x.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return None
    digits = max(twos, fives)
    scaled = abs(x.numerator) * (10**digits // x.denominator)
    s = str(scaled).rjust(digits + 1, "0")
    body = s[:-digits] + "." + s[-digits:] if digits else s
    if "." in body:
        body = body.rstrip("0").rstrip(".")
    return ("-" if x < 0 else "") + body


def encode_number(x, prec: int = 53):
    if isinstance(x, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(x, int):
        return x
    if isinstance(x, float):
        if not math.isfinite(x):
            return repr(x)
        return x
    if isinstance(x, Fraction):
        if x.denominator == 1:
            return x.numerator
        return _terminating_decimal(x) or f"{x.numerator}/{x.denominator}"
    if isinstance(x, mpmath.mpf):
        dps = int(prec * 0.30103) + 3
        return mpmath.nstr(x, dps, strip_zeros=True, min_fixed=1, max_fixed=0)
    raise TypeError(f"cannot encode {type(x).__name__}")


def decode_number(v, prec: int = 53):
    """Inverse of :func:`encode_number`.

    Strings become ``Fraction`` (exact) unless ``prec > 53`` and the string is
    a plain decimal, in which case an ``mpf`` at ``prec`` bits is produced.
    """
    if isinstance(v, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(v, (int, float)):
        return v
    if isinstance(v, str):
        s = v.strip()
        if s in ("inf", "-inf", "nan"):
            return float(s)
        if "/" in s:
            return Fraction(s)
        if prec > 53:
            with mpmath.workprec(prec):
                return mpmath.mpf(s)
        return Fraction(s)
    raise TypeError(f"cannot decode {v!r}")


def to_float(x) -> float:
    try:
        return float(x)
    except OverflowError:
        return math.inf if x > 0 else -math.inf


def fmt17(x) -> str:
    """17-significant-digit decimal text of a real (any numeric type)."""
    if isinstance(x, mpmath.mpf):
        return mpmath.nstr(x, 17)
    xf = float(x)
    if not math.isfinite(xf):
        return repr(xf)
    return format(xf, ".17g")
