"""Command-line front door.

Exit status: 0 when every reported check is satisfied, 1 when at least one is
violated, 2 for usage or input errors, 3 when a construction ran out of
working precision (the partial trace is still written).
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import mpmath
import numpy as np

from . import analysis as an
from . import construct as cs
from . import pfunc as pf
from .errors import PrecisionExhausted, RenewalGFError
from .phispec import parse_phi
from .renewal import difference_diagnostics, efp_diagnostic, renewal_csv, renewal_sequence, verify_gf_identity
from .reports import VerificationReport, emit_report, to_json
from .seqcore import CoefficientSequence, ExpPolynomial, from_record, is_aperiodic
from .serialize import decode_number

EXIT_OK, EXIT_VIOLATED, EXIT_USAGE, EXIT_PRECISION = 0, 1, 2, 3

TAGS = """report tags:
  renewal          renewal-gf-identity, erdos-feller-pollard, renewal-differences
  construct        rotation-stage-gap, delta-schedule-sum, total-distance,
                   frequency-times-theta, rotation-window, ratio-decreasing
  croft            croft-* (as construct) plus croft-imag-residual, croft-frequency-range
  verify-measure   littlewood-superlevel
  verify-lp        dyadic-lp-bound, lp-series-criterion, lp-threshold, l2-certificate
  verify-l1        l1-two-sided
  verify-cake      layer-cake
  verify-n2        dyadic-condensation-lower, dyadic-condensation-upper
  pfunc-probe      weighted-moment-budget, vanishing-ratio-probe
  replay-trace     the construct/croft tags, re-derived from the trace file

phi grammar: factors joined by '*', each a number, theta, theta^a,
abs(log(theta)) or abs(log(theta))^a; e.g. "theta^-0.25*abs(log(theta))^2".
"""


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    precision: cs.Precision = field(default_factory=cs.Precision)
    tolerances: dict = field(default_factory=lambda: {"quadrature_rel": an.QUAD_RTOL,
                                                       "root_rel": 1e-14, "cert_slack": 0.0})
    grid: int = 10**5
    fmt: str = "json"
    seed: int = 0

    def __post_init__(self):
        for k in ("quadrature_rel", "root_rel"):
            if not self.tolerances[k] > 0:
                raise UsageError(f"tolerance {k} must be positive")
        if self.fmt not in ("json", "csv"):
            raise UsageError(f"unknown format {self.fmt!r}")

    @property
    def construction(self) -> cs.ConstructionConfig:
        return cs.ConstructionConfig(self.precision, root_rtol=self.tolerances["root_rel"])


# --------------------------------------------------------------------------
# inputs


def load_coeffs(path: str):
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from exc
    if isinstance(data, dict) and "terms" in data:
        return from_record(data)
    if isinstance(data, dict):
        items = data.items()
    elif isinstance(data, list):
        items = data
    else:
        raise UsageError(f"{path}: expected a mapping or a list of [k, a_k] pairs")
    try:
        return CoefficientSequence(tuple((int(k), decode_number(a)) for k, a in items))
    except (TypeError, ValueError) as exc:
        raise UsageError(f"{path}: bad coefficient entry ({exc})") from exc


def random_sequence(rng: np.random.Generator, max_support: int = 30) -> CoefficientSequence:
    """Normalised sequence with ``a_1 > 0`` (so aperiodic) and support in ``[1, max_support]``."""
    n = int(rng.integers(1, max_support))
    k = np.unique(np.concatenate([[1], rng.choice(np.arange(2, max_support + 1), size=n, replace=False)]))
    w = rng.random(len(k)) + 1e-3
    w = w / w.sum()
    return CoefficientSequence(tuple(zip(map(int, k), w.tolist())))


def _family(spec: str):
    kind, _, rest = spec.partition(":")
    if kind != "log":
        raise UsageError(f"unknown family {spec!r}; use log:EPS[:N]")
    eps, _, n = rest.partition(":")
    return an.log_power_family(float(eps), int(n) if n else 4096)


def load_functions(args, cfg: RunConfig) -> list:
    fs = []
    if getattr(args, "coeffs", None):
        fs.append(load_coeffs(args.coeffs))
    if getattr(args, "family", None):
        fs.append(_family(args.family))
    k = getattr(args, "random", 0) or 0
    if k:
        rng = np.random.default_rng(cfg.seed)
        fs.extend(random_sequence(rng) for _ in range(k))
    if not fs:
        raise UsageError("give --coeffs PATH, --family log:EPS or --random K")
    return fs


def _floats(text: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}") from exc


def _ints(text: str) -> list:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"expected a comma-separated list of integers, got {text!r}") from exc


def _levels(text: str) -> list:
    lo, _, hi = text.partition(":")
    try:
        return list(range(int(lo), int(hi or lo) + 1))
    except ValueError as exc:
        raise UsageError(f"bad level range {text!r}; use J or J0:J1") from exc


def beta_handle(spec: str):
    """``inv-log`` (1/(1+log t)), ``power:a`` (t^-a) or ``const`` (1)."""
    if spec == "inv-log":
        return lambda t: 1 / (1 + mpmath.log(t))
    if spec == "const":
        return lambda t: mpmath.mpf(1)
    if spec.startswith("power:"):
        a = mpmath.mpf(spec.split(":", 1)[1])
        if not 0 < a <= 1:
            raise UsageError("power:a needs a in (0,1]")
        return lambda t: mpmath.mpf(t) ** -a
    raise UsageError(f"unknown beta {spec!r}; use inv-log, power:a or const")


# --------------------------------------------------------------------------
# subcommands


def cmd_renewal(args, cfg):
    fs = load_functions(args, cfg)
    if len(fs) != 1:
        raise UsageError("renewal takes exactly one sequence")
    a = fs[0]
    if not isinstance(a, CoefficientSequence):
        raise UsageError("renewal needs integer indices")
    b = renewal_sequence(a, args.n, exact=True if args.exact else None)
    if cfg.fmt == "csv":
        return [verify_gf_identity(a, b)], renewal_csv(b)
    reports = [verify_gf_identity(a, b)]
    if not a.tail_mass and is_aperiodic(a):
        reports.append(efp_diagnostic(a, b))
    if args.n >= 1:
        d = difference_diagnostics(b)
        reports.append(VerificationReport("renewal-differences", {"N": args.n},
                                          d.abs_variation[-1], None, True, None, 0.0,
                                          {"sq_variation": d.sq_variation[-1],
                                           "hardy": d.hardy[-1], "blocks": d.blocks}))
    return reports, None


def _f0(args):
    if getattr(args, "coeffs", None):
        return load_coeffs(args.coeffs)
    return {1: 1}


def _write_trace(trace, path):
    if path is None or trace is None:
        return
    try:
        Path(path).write_text(to_json(cs.trace_to_record(trace)))
    except OSError as exc:
        raise UsageError(f"cannot write trace to {path}: {exc}") from exc


def _run_iterative(args, cfg, engine):
    phi = parse_phi(args.phi)
    exhausted = None
    try:
        trace = cs.iterative_counterexample(_f0(args), args.eps, args.delta, phi, args.nu,
                                            args.stages, cfg.construction, engine=engine)
    except PrecisionExhausted as exc:
        if exc.trace is None:
            raise
        trace, exhausted = exc.trace, exc
    _write_trace(trace, args.out)
    args.out = args.report
    reports = cs.certify_trace(trace, cfg.construction.samples) if trace.stages else []
    if engine == "croft":
        reports += cs.croft_stage_checks(trace.stages)
    return reports, exhausted


def cmd_construct(args, cfg):
    return _run_iterative(args, cfg, args.engine)


def cmd_croft(args, cfg):
    return _run_iterative(args, cfg, "croft")


def cmd_verify_measure(args, cfg):
    eps = _floats(args.eps)
    out = []
    for f in load_functions(args, cfg):
        for _, rep in an.superlevel_measure(f, eps, args.grid or cfg.grid):
            out.append(rep)
    return out, None


def cmd_verify_lp(args, cfg):
    out = []
    thetas = [args.theta0] if args.theta0 is not None else [2.0 ** -j for j in _levels(args.levels)]
    rtol = cfg.tolerances["quadrature_rel"]
    for f in load_functions(args, cfg):
        for p in _floats(args.p):
            for t in thetas:
                out.append(an.dyadic_lp_integral(f, p, t, rtol=rtol).to_report())
        if args.criteria:
            out.extend(an.lp_criteria(f, nu=args.nu, p=max(_floats(args.p))))
    return out, None


def cmd_verify_l1(args, cfg):
    return [an.l1_two_sided(f, args.m0, args.N, cfg.tolerances["quadrature_rel"])
            for f in load_functions(args, cfg)], None


def cmd_verify_cake(args, cfg):
    phi = parse_phi(args.phi)
    h = (args.hi - args.lo) / args.cells
    s = args.lo + h * (np.arange(args.cells) + 0.5)
    vals = np.array([float(phi(float(x))) for x in s])
    return [an.layer_cake_check(vals, h, args.eta, args.r, args.A, args.d, args.p)], None


_Q = {
    "inv-square": lambda n: Fraction(1, n * n),
    "inv-cube": lambda n: Fraction(1, n * n * n),
    "inv-nlog2": lambda n: Fraction(1.0 / (n * math.log(n + 1) ** 2)),
}


def cmd_verify_n2(args, cfg):
    if args.q not in _Q:
        raise UsageError(f"unknown q {args.q!r}; choose from {', '.join(_Q)}")
    return an.dyadic_block_compare(_Q[args.q], _floats(args.alpha), _ints(args.m), args.N), None


def cmd_pfunc_probe(args, cfg):
    if args.coeffs and args.theta:
        f = load_coeffs(args.coeffs)
        ths = _floats(args.theta)
        vals = pf.vanishing_ratio_probe(f, ths)
        mags = [abs(v) for v in vals]
        return [VerificationReport("vanishing-ratio-probe", {"thetas": ths}, mags, None,
                                   all(b < a for a, b in zip(mags, mags[1:])), None, 0.0,
                                   {"ratios": vals})], None
    beta = beta_handle(args.beta)
    nu, reports, trace = pf.hww_construct(beta, args.eps, args.stages, cfg.construction)
    reports[-1].meta["atoms"] = len(nu.atoms)
    exhausted = None
    if trace.exhausted:
        exhausted = PrecisionExhausted(trace.exhausted["stage"], trace.exhausted["reason"], trace)
    return reports, exhausted


def cmd_replay(args, cfg):
    try:
        rec = json.loads(Path(args.trace).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read {args.trace}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{args.trace} is not valid JSON: {exc}") from exc
    eps_seq = beta_handle(args.beta) if args.beta else None
    trace = cs.trace_from_record(rec, eps_seq)
    reports = cs.certify_trace(trace, args.samples)
    if trace.engine == "croft":
        reports += cs.croft_stage_checks(trace.stages)
    return reports, None


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--format", default="json", choices=["json", "csv"])
    common.add_argument("--seed", type=int, default=0, help="seed for --random suites")
    common.add_argument("--precision", default="binary64", help="binary64 or extended:BITS")
    common.add_argument("--quad-rtol", type=float, default=an.QUAD_RTOL)
    common.add_argument("--root-rtol", type=float, default=1e-14)

    src = argparse.ArgumentParser(add_help=False)
    src.add_argument("--coeffs", help="JSON coefficients: {k: a_k}, [[k, a_k], ...] or a record")
    src.add_argument("--family", help="log:EPS[:N], a_k ~ log^EPS(k+1)/k^2")
    src.add_argument("--random", type=int, default=0, help="add K seeded random sequences")

    p = argparse.ArgumentParser(prog="renewalgf", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter, epilog=TAGS)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("renewal", parents=[common, src], help="renewal sequence and diagnostics")
    s.add_argument("--n", type=int, default=30)
    s.add_argument("--exact", action="store_true")
    s.set_defaults(run=cmd_renewal)

    for name, fn, help_ in (("construct", cmd_construct, "flat-window induction"),
                            ("croft", cmd_croft, "flat-window induction with integer frequencies")):
        s = sub.add_parser(name, parents=[common], help=help_)
        s.add_argument("--coeffs", help="starting polynomial (default a_1 = 1)")
        s.add_argument("--phi", required=True)
        s.add_argument("--nu", type=float, default=0.0)
        s.add_argument("--eps", type=float, default=0.5)
        s.add_argument("--delta", type=float, default=1.0)
        s.add_argument("--stages", type=int, default=3)
        s.add_argument("--report", help="write the report here (--out receives the trace)")
        if name == "construct":
            s.add_argument("--engine", choices=["rotation", "croft"], default="rotation")
        s.set_defaults(run=fn)

    s = sub.add_parser("verify-measure", parents=[common, src], help="superlevel measure bound")
    s.add_argument("--eps", default="0.1,0.01,0.001")
    s.add_argument("--grid", type=int, default=None)
    s.set_defaults(run=cmd_verify_measure)

    s = sub.add_parser("verify-lp", parents=[common, src], help="dyadic L^p bound")
    s.add_argument("--p", default="1")
    s.add_argument("--theta0", type=float, default=None)
    s.add_argument("--levels", default="2:10", help="theta0 = 2^-j for j in J0:J1")
    s.add_argument("--nu", type=float, default=None)
    s.add_argument("--criteria", action="store_true", help="also run the membership criteria")
    s.set_defaults(run=cmd_verify_lp)

    s = sub.add_parser("verify-l1", parents=[common, src], help="two-sided L^1 series")
    s.add_argument("--m0", type=int, default=1)
    s.add_argument("--N", type=int, default=4096)
    s.set_defaults(run=cmd_verify_l1)

    s = sub.add_parser("verify-cake", parents=[common], help="layer-cake estimate")
    s.add_argument("--phi", default="theta")
    s.add_argument("--lo", type=float, default=0.25)
    s.add_argument("--hi", type=float, default=1.0)
    s.add_argument("--cells", type=int, default=100_000)
    s.add_argument("--eta", type=float, default=0.25)
    s.add_argument("--r", type=float, default=1.0)
    s.add_argument("--A", type=float, default=1.0)
    s.add_argument("--d", type=float, default=0.0)
    s.add_argument("--p", type=float, default=1.0)
    s.set_defaults(run=cmd_verify_cake)

    s = sub.add_parser("verify-n2", parents=[common], help="dyadic condensation inequalities")
    s.add_argument("--q", default="inv-square", help=", ".join(_Q))
    s.add_argument("--alpha", default="1")
    s.add_argument("--m", default="2")
    s.add_argument("--N", type=int, default=20)
    s.set_defaults(run=cmd_verify_n2)

    s = sub.add_parser("pfunc-probe", parents=[common], help="ratio probe for p-functions")
    s.add_argument("--beta", default="inv-log", help="inv-log, power:a or const")
    s.add_argument("--eps", type=float, default=0.5)
    s.add_argument("--stages", type=int, default=3)
    s.add_argument("--coeffs", help="probe this series directly at --theta")
    s.add_argument("--theta", help="comma-separated decreasing thetas")
    s.set_defaults(run=cmd_pfunc_probe)

    s = sub.add_parser("replay-trace", parents=[common], help="re-verify a stored trace")
    s.add_argument("--trace", required=True)
    s.add_argument("--beta", help="eps sequence of a betak trace (same names as pfunc-probe)")
    s.add_argument("--samples", type=int, default=201)
    s.set_defaults(run=cmd_replay)
    return p


def run_command(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        cfg = RunConfig(cs.Precision.parse(args.precision),
                        {"quadrature_rel": args.quad_rtol, "root_rel": args.root_rtol,
                         "cert_slack": 0.0}, 10**5, args.format, args.seed)
        reports, extra = args.run(args, cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PrecisionExhausted as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    except (RenewalGFError, ValueError, OverflowError, TypeError, KeyError, ZeroDivisionError) as exc:
        # anything reaching here was triggered by the supplied input
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if isinstance(extra, str):
        text = extra
    else:
        text = emit_report(reports, cfg.fmt)
    if args.out:
        try:
            Path(args.out).write_text(text)
        except OSError as exc:
            print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
            return EXIT_USAGE
    else:
        sys.stdout.write(text)
    if isinstance(extra, PrecisionExhausted):
        print(f"warning: {extra}", file=sys.stderr)
        return EXIT_PRECISION
    return EXIT_OK if all(r.satisfied for r in reports) else EXIT_VIOLATED


def main():
    sys.exit(run_command())


if __name__ == "__main__":
    main()
