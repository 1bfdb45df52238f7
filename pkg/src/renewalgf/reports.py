"""Structured verification records and their deterministic serialisation."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable

import mpmath
import numpy as np

from .serialize import fmt17


@dataclass
class VerificationReport:
    """One inequality check: ``lhs <= rhs`` (or a named property) and its context."""

    theorem_tag: str
    inputs: dict = field(default_factory=dict)
    lhs: Any = None
    rhs: Any = None
    satisfied: bool = True
    error_estimate: Any = None
    tolerance: Any = 0.0
    meta: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        return {
            "theorem_tag": self.theorem_tag,
            "inputs": _plain(self.inputs),
            "lhs": _plain(self.lhs),
            "rhs": _plain(self.rhs),
            "satisfied": bool(self.satisfied),
            "error_estimate": _plain(self.error_estimate),
            "tolerance": _plain(self.tolerance),
            "meta": _plain(self.meta),
        }


def check(tag: str, lhs, rhs, tol=0.0, inputs=None, **meta) -> VerificationReport:
    """Report for ``lhs <= rhs + tol``.  Raw values are stored unrounded."""
    ok = bool(lhs <= rhs + tol)
    return VerificationReport(tag, inputs or {}, lhs, rhs, ok, meta.pop("error_estimate", None), tol, meta)


def _plain(x):
    """Reduce ``x`` to JSON types; floats keep full binary64 value."""
    if x is None or isinstance(x, (bool, str)):
        return x
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else float(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, mpmath.mpf):
        if not mpmath.isfinite(x):
            return str(x)
        f = float(x)
        # keep values outside the double range as decimal strings
        return f if (f != 0.0 or x == 0) and math.isfinite(f) else fmt17(x)
    if isinstance(x, (complex, mpmath.mpc, np.complexfloating)):
        return {"re": _plain(x.real), "im": _plain(x.imag)}
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_plain(v) for v in x]
    if hasattr(x, "to_record"):
        return _plain(x.to_record())
    return str(x)


def _scalar(v) -> str:
    if isinstance(v, float):
        return fmt17(v)
    return json.dumps(v)


def _dump(obj, indent=0) -> str:
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad}  {json.dumps(k)}: {_dump(v, indent + 1)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_scalar(v) for v in obj) + "]"
        items = [pad + "  " + _dump(v, indent + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    return _scalar(obj)


def to_json(obj) -> str:
    """Deterministic JSON: insertion-ordered keys, numbers with 17 significant digits."""
    return _dump(_plain(obj)) + "\n"


def flatten(rec: dict, prefix="") -> dict:
    out = {}
    for k, v in rec.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(flatten(v, key + "."))
        elif isinstance(v, list):
            for i, item in enumerate(v):
                if isinstance(item, dict):
                    out.update(flatten(item, f"{key}.{i}."))
                else:
                    out[f"{key}.{i}"] = item
        else:
            out[key] = v
    return out


def _cell(v):
    if isinstance(v, float):
        return fmt17(v)
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def to_csv(reports: Iterable) -> str:
    rows = [flatten(_plain(r)) for r in reports]
    cols: list = []
    for row in rows:
        for k in row:
            if k not in cols:
                cols.append(k)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in rows:
        w.writerow([_cell(row.get(c)) for c in cols])
    return buf.getvalue()


def table_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(_plain(v)) for v in row])
    return buf.getvalue()


def render(reports, fmt="json") -> str:
    reports = list(reports)
    if fmt == "json":
        return to_json({"reports": reports})
    if fmt == "csv":
        return to_csv(reports)
    raise ValueError(f"unknown format {fmt!r}")


def emit_report(reports, fmt="json", path=None) -> str:
    """Serialise ``reports`` and write them to ``path`` (stdout-friendly text returned)."""
    text = render(reports, fmt)
    if path is not None:
        p = Path(path)
        try:
            p.write_text(text)
        except OSError as exc:
            raise OSError(f"cannot write report to {p}: {exc}") from exc
    return text
