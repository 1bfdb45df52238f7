"""Tables of the dyadic L^p integrals against their bound, and of the two-sided
L^1 series, for the log-power family.

    python3 scripts/lp_tables.py --levels 2:14
"""
import argparse

from renewalgf import analysis as an
from renewalgf.seqcore import CoefficientSequence


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--levels", default="2:12")
    ap.add_argument("--N", type=int, default=4096)
    args = ap.parse_args()
    lo, hi = (int(x) for x in args.levels.split(":"))

    fams = {"log^0": an.log_power_family(0.0, args.N), "log^1": an.log_power_family(1.0, args.N),
            "a1=1": CoefficientSequence(((1, 1.0),))}
    for name, f in fams.items():
        poly = f.to_poly()
        print(f"\n{name}")
        print(f"{'j':>3} " + " ".join(f"{'p=' + str(p) + ' int':>12} {'bound':>10}" for p in (1, 2, 3)))
        for j in range(lo, hi + 1):
            cells = []
            for p in (1, 2, 3):
                r = an.dyadic_lp_integral(poly, p, 2.0 ** -j)
                cells.append(f"{r.integral:12.5g} {r.rhs:10.3g}")
            print(f"{j:3d} " + " ".join(cells))
    print()
    for name, f in fams.items():
        if name == "a1=1":
            continue
        rep = an.l1_two_sided(f, 1, args.N)
        m = rep.meta
        print(f"{name}: lower {m['lower_verdict']}, upper {m['upper_verdict']}, "
              f"integral levels {m['integral_verdict']}")


if __name__ == "__main__":
    main()
