"""Plot-ready pmf, survival and hazard curves for a set of shapes at one scale.

    python scripts/dist_curves.py --beta 2 --alphas 0.5 1.5 2.5 --smax 20 > curves.csv
"""

import argparse
import csv
import sys

import numpy as np

from discbs import DistParams, hazard, pmf, reliability


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--beta", type=float, default=2.0)
    ap.add_argument("--alphas", type=float, nargs="+", default=[0.5, 1.5, 2.5, 3.0])
    ap.add_argument("--smax", type=int, default=20)
    args = ap.parse_args()

    s = np.arange(args.smax + 1)
    w = csv.writer(sys.stdout)
    w.writerow(["alpha", "beta", "s", "pmf", "reliability", "hazard"])
    for a in args.alphas:
        p = DistParams(a, args.beta)
        for row in zip(s, pmf(s, p), reliability(s, p), hazard(s, p)):
            w.writerow([a, args.beta, *row])


if __name__ == "__main__":
    main()
