"""Write the curve data for every figure id as CSV files.

Usage: python3 scripts/figure_data.py [OUTDIR] [--samples N]
"""

from __future__ import annotations

import argparse
import pathlib
import sys

from phaselab import cli


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("outdir", nargs="?", default="figure_data")
    ap.add_argument("--samples", type=int, default=401)
    args = ap.parse_args(argv)
    out = pathlib.Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    for fig in sorted(cli.FIGURES):
        path = out / f"{fig}.csv"
        status = cli.main(["figure", "--id", fig, "--samples", str(args.samples),
                           "--format", "csv", "--out", str(path)])
        if status:
            return status
        print(f"{fig}: {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
