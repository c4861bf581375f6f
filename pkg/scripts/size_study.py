"""Empirical sizes of the max tests under N5(0, Sigma) for a range of n."""

import argparse

import numpy as np

from submardia import ExperimentConfig, Gaussian, equicorrelation, estimate_size

TESTS = ("MaxS", "MaxK", "MaxSK", *(f"{b}_{q}" for b in ("MaxS", "MaxK", "MaxSK") for q in range(1, 6)))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=[100, 200, 500, 1000])
    ap.add_argument("--replicates", type=int, default=1000)
    ap.add_argument("--reps", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    spec = Gaussian(equicorrelation(5))
    table = {}
    for k, n in enumerate(args.n):
        cfg = ExperimentConfig(spec, n, args.replicates, TESTS, args.reps, seed=args.seed + k,
                               workers=args.workers)
        table[n] = estimate_size(cfg)
    print("test     " + "".join(f"n={n:<8}" for n in args.n))
    for t in TESTS:
        print(f"{t:8} " + "".join(f"{table[n][t].rejection_rate:<10.3f}" for n in args.n))
    se = np.sqrt(0.05 * 0.95 / args.replicates)
    print(f"\nMonte Carlo standard error at the nominal level: {se:.4f}")


if __name__ == "__main__":
    main()
