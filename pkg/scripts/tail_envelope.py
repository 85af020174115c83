"""Empirical tails of |T| and of the decoupled |S| against the fitted envelope."""

import argparse

from plantedcycle.io import write_csv
from plantedcycle.model import Params
from plantedcycle.ustat import tail_envelope_compare


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--tau", type=float, default=0.05)
    ap.add_argument("--trials", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out-prefix", default="runs/tail")
    args = ap.parse_args()
    P = Params.create(args.n, args.tau, 0.3, 0.2)
    for stat in ("T", "S"):
        table = tail_envelope_compare(P, args.trials, args.seed, stat, threads=args.threads)
        path = write_csv(f"{args.out_prefix}_{stat}.csv", table.rows(), list(table.rows()[0]), vars(args) | {"stat": stat})
        print(f"{stat}: K={table.K:.3g} dominates={table.dominates} -> {path}")


if __name__ == "__main__":
    main()
