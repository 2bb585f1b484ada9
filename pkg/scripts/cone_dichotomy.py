"""Scan the radial stability form on Simons-type cones and print the verdicts.

Usage: python3 scripts/cone_dichotomy.py [--n 4,6,8,10] [--grid 8] [--refine 60]
"""

from __future__ import annotations

import argparse
import sys

from phaselab import conestab


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", default="4,6,8,10", help="comma-separated even dimensions")
    ap.add_argument("--grid", type=int, default=8)
    ap.add_argument("--refine", type=int, default=60)
    args = ap.parse_args(argv)
    ns = [int(v) for v in args.n.split(",")]
    budget = conestab.SearchBudget(grid=args.grid, refine=args.refine)
    print(f"{'n':>3} {'sff^2':>8} {'hardy':>8} {'best quotient':>14}  verdict")
    for v in conestab.stability_scan(ns, budget):
        print(f"{v.n:>3} {v.sff_norm_unit**2:8.4f} {v.hardy_constant:8.4f} "
              f"{v.best_quotient:14.6f}  {v.verdict}")
    print("dimensions where the standard exponents are admissible:",
          [n for n in range(2, 10) if conestab.exponents_admissible(n, *conestab.standard_exponents(n))])
    return 0


if __name__ == "__main__":
    sys.exit(main())
