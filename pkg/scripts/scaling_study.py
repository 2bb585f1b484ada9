"""Fitted small-eps behaviour of the nonlocal profile energy, and the
interaction lower bound across the gap, for a few kernel exponents.

Usage: python3 scripts/scaling_study.py
"""

from __future__ import annotations

import sys

from phaselab import geometry, nonlocalfield


def main() -> int:
    print("profile energy eps^alpha J(eps)")
    for alpha in (0.5, 1.0, 1.5):
        eps = [2.0**-k for k in range(3, 8)]
        rep = nonlocalfield.scaling_probe(alpha, eps)
        print(f"  alpha={alpha:4.2f}  regressor={rep.regressor:<14} "
              f"slope={rep.fitted_exponent:.4f}  r2={rep.r2:.5f}")
    print("interaction across a gap g")
    gaps = [2.0**-k for k in range(2, 9)]
    for alpha in (1.0, 1.5):
        rep = geometry.interaction_lower_bound_probe(gaps, alpha)
        print(f"  alpha={alpha:4.2f}  regressor={rep.regressor:<8} "
              f"slope={rep.slope:.4f}  r2={rep.r2:.5f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
