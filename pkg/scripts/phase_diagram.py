"""Phase-diagram sweep over p = n^-a, tau = n^-b, written as CSV plus an SVG.

    python3 scripts/phase_diagram.py --n 200 --trials 50 --out runs/phase.csv
"""

import argparse
import sys

from plantedcycle import cli


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--grid", default="a=0.1:0.9:0.1,b=0.1:0.9:0.1")
    ap.add_argument("--trials", type=int, default=50)
    ap.add_argument("--restarts", type=int, default=5)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out", default="runs/phase.csv")
    args = ap.parse_args()
    svg = args.out.rsplit(".", 1)[0] + ".svg"
    return cli.run([
        "sweep", "--n", str(args.n), "--grid", args.grid, "--trials", str(args.trials),
        "--restarts", str(args.restarts), "--seed", str(args.seed), "--threads", str(args.threads),
        "--out", args.out, "--svg", svg,
    ])  # fmt: skip


if __name__ == "__main__":
    sys.exit(main())
