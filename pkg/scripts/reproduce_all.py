#!/usr/bin/env python3
"""Emit every experiment table at the chosen scale.

Usage: python scripts/reproduce_all.py [--scale desk|paper] [--output-dir DIR]
"""

import argparse
import sys

from fsens.cli import main as fsens_main


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--scale", choices=["desk", "paper"], default="desk")
    ap.add_argument("--output-dir", default="reproduce_out")
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args()

    for fig in (1, 2, 3, 4, 5, 6):
        argv = ["reproduce", "--figure", str(fig), "--scale", args.scale,
                "--output-dir", args.output_dir]
        if args.threads:
            argv += ["--threads", str(args.threads)]
        rc = fsens_main(argv)
        if rc != 0:
            print(f"figure {fig} failed with exit code {rc}", file=sys.stderr)
            return rc
    return 0


if __name__ == "__main__":
    sys.exit(main())
