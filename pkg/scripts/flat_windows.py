"""Run the flat-window induction and print one line per stage.

    python3 scripts/flat_windows.py --stages 3 --precision extended:32768
"""
import argparse

import mpmath

from renewalgf import construct as cs
from renewalgf.errors import PrecisionExhausted
from renewalgf.phispec import parse_phi


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--phi", default="theta^-0.25")
    ap.add_argument("--nu", type=float, default=0.0)
    ap.add_argument("--eps", type=float, default=0.5)
    ap.add_argument("--delta", type=float, default=1.0)
    ap.add_argument("--stages", type=int, default=3)
    ap.add_argument("--engine", choices=["rotation", "croft"], default="rotation")
    ap.add_argument("--precision", default="extended:32768")
    args = ap.parse_args()

    cfg = cs.ConstructionConfig(cs.Precision.parse(args.precision))
    try:
        trace = cs.iterative_counterexample({1: 1}, args.eps, args.delta, parse_phi(args.phi),
                                            args.nu, args.stages, cfg, engine=args.engine)
    except PrecisionExhausted as exc:
        print(f"stopped: {exc}")
        trace = exc.trace
    ratios = cs.trace_ratios(trace)
    print(f"{'stage':>5} {'log10 theta':>12} {'bits(m)':>8} {'prec':>6} {'log10 ratio':>12}")
    for j, (st, r) in enumerate(zip(trace.stages, ratios), 1):
        with mpmath.workprec(st.prec):
            print(f"{j:5d} {float(mpmath.log10(st.theta)):12.3f} {st.m.bit_length():8d} "
                  f"{st.prec:6d} {float(mpmath.log10(r)):12.3f}")
    reps = cs.certify_trace(trace) if trace.stages else []
    bad = [r.theorem_tag for r in reps if not r.satisfied]
    print(f"{len(reps)} checks, failed: {bad or 'none'}")


if __name__ == "__main__":
    main()
