"""Power of MaxS, MaxK and MaxSK in the three composite models over a parameter grid."""

import argparse

from submardia import CompositeModel, ExperimentConfig, estimate_power

GRIDS = {1: ("alpha", [0, 1, 2, 3, 4, 5, 6]), 2: ("nu", [3, 5, 8, 12, 20, 30]),
         3: ("nu", [3, 5, 8, 12, 20, 30])}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--model", type=int, choices=(1, 2, 3), nargs="+", default=[1, 2, 3])
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--replicates", type=int, default=1000)
    ap.add_argument("--reps", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=11)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    for m in args.model:
        key, values = GRIDS[m]
        print(f"Model {m}")
        for v in values:
            spec = CompositeModel(m, p=5, q=2, **{key: v})
            cfg = ExperimentConfig(spec, args.n, args.replicates, reps=args.reps,
                                   seed=args.seed + m, workers=args.workers)
            rates = estimate_power(cfg)
            cells = "  ".join(f"{t} {r.rejection_rate:.3f}" for t, r in rates.items())
            print(f"  {key}={v:<4} {cells}")


if __name__ == "__main__":
    main()
