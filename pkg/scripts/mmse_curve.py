"""Exact MMSE along the interpolation path and the recovery ratio at tiny n."""

import argparse
import math

import numpy as np

from plantedcycle import bayes
from plantedcycle.model import Params


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=3)
    ap.add_argument("--m", type=int, default=16)
    ap.add_argument("--tau", type=float, default=0.25)
    ap.add_argument("--p", type=float, default=0.7)
    ap.add_argument("--q", type=float, default=0.2)
    ap.add_argument("--points", type=int, default=20)
    args = ap.parse_args()
    P = Params.create(args.n, args.tau, args.p, args.q)
    grid = bayes.LatentGrid(args.n, args.m)
    pe = bayes.grid_edge_prob(args.tau, args.m)
    trivial = math.comb(args.n, 2) * pe * (1 - pe)
    thetas = np.linspace(P.r, 1.0, args.points)
    print("theta      mmse        ratio")
    for th, v in zip(thetas, bayes.mmse_curve(P, thetas, grid)):
        print(f"{th:.4f}  {v:.8f}  {v / trivial:.4f}")


if __name__ == "__main__":
    main()
