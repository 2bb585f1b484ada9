"""Minimise the local energy near a tilted planar layer and report the
density, band, clean-ball and trapping diagnostics.

Usage: python3 scripts/interfaces_demo.py [--eps 1/64] [--h 1/256] [--angle 0.4]
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction

from phaselab import interfaces


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eps", type=Fraction, default=Fraction(1, 64))
    ap.add_argument("--h", type=Fraction, default=Fraction(1, 256))
    ap.add_argument("--half-width", type=float, default=0.6)
    ap.add_argument("--angle", type=float, default=0.4)
    ap.add_argument("--theta", type=float, default=0.9)
    args = ap.parse_args(argv)
    f = interfaces.planar_minimizer(float(args.eps), args.half_width, float(args.h),
                                    angle=args.angle)
    radii = (0.125, 0.25, 0.5)
    floor = 0.1 * interfaces.unit_ball_volume(2)
    stats = interfaces.density_ratios(f, -args.theta, args.theta, radii)
    band = interfaces.band_measure(f, args.theta, radii)
    trap = interfaces.trapped_flatness(f, args.theta, radii)
    print(f"eps={float(args.eps)} h={float(args.h)} angle={args.angle} density floor={floor:.4f}")
    print(f"{'r':>6} {'above':>8} {'below':>8} {'band':>8} {'kappa':>6} {'gamma':>8}")
    for i, r in enumerate(radii):
        kappa = interfaces.clean_ball_search(f, args.theta, r).kappa_found
        print(f"{r:6.3f} {stats.ratios_above[i]:8.4f} {stats.ratios_below[i]:8.4f} "
              f"{band.ratios[i]:8.4f} {kappa:6.3f} {trap.rows[i].gamma:8.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
