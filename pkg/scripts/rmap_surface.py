#!/usr/bin/env python3
"""Surface of the early-plateau reduction ratio R(r, theta).

Produces the grid CSV (with the located minimum and per-slice negative-
interval widths in the header comments) via the rmap command.

Usage: python scripts/rmap_surface.py [--out-dir results]
"""

import argparse
import os
import sys

from sqnz.cli import main as cli_main


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="results")
    ap.add_argument("--r-max", type=float, default=3.0)
    args = ap.parse_args(argv)
    os.makedirs(args.out_dir, exist_ok=True)
    out = os.path.join(args.out_dir, "rmap.csv")
    code = cli_main([
        "rmap", "--out", out,
        "--r-max", str(args.r_max), "--n-r", "121", "--n-theta", "241",
    ])
    if code == 0:
        print(f"wrote {out}")
    return code


if __name__ == "__main__":
    sys.exit(main())
