"""Scan ||a0||_1 across the admissibility threshold: for each gamma and
geometry, report whether the sampled C1/C2 conditions hold and whether the
transformed system keeps its sign pattern.

    python3 scripts/threshold_scan.py --out out/threshold_scan.csv
"""
import argparse
import csv
from pathlib import Path

import numpy as np

from nozzleflow.maxprinciple import check_C1_C2, integrate_system, nozzle_preset


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--gammas", type=float, nargs="+", default=[1.5, 5.0 / 3.0, 2.0])
    ap.add_argument("--fractions", type=float, nargs="+",
                    default=list(np.round(np.arange(0.2, 3.01, 0.2), 2)))
    ap.add_argument("--out", type=Path, default=Path("out/threshold_scan.csv"))
    args = ap.parse_args()

    rows = []
    for gamma in args.gammas:
        for geometry in ("laval", "expmonotone"):
            for frac in args.fractions:
                spec = nozzle_preset(gamma, geometry, a0_fraction=frac)
                cond = check_C1_C2(spec)
                _, signs = integrate_system(spec)
                rows.append({"gamma": gamma, "geometry": geometry, "a0_fraction": frac,
                             "c1_pass": cond.c1_pass, "c2_pass": cond.c2_pass,
                             "worst_c1": cond.worst_c1[0], "worst_c2": cond.worst_c2[0],
                             "preserved": signs.preserved, "max_p": signs.max_p,
                             "min_q": signs.min_q})
                r = rows[-1]
                print(f"gamma={gamma:.4g} {geometry:11s} frac={frac:4.2f} "
                      f"C1={'ok' if r['c1_pass'] else 'FAIL'} C2={'ok' if r['c2_pass'] else 'FAIL'} "
                      f"signs={'kept' if r['preserved'] else 'LOST'}")
    args.out.parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
