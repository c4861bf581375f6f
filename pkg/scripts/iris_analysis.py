"""Mardia baselines and max tests on the bundled iris data (setosa and all species)."""

import argparse
import csv
from importlib import resources

import numpy as np

from submardia import (
    mardia_kurtosis_test,
    mardia_skewness_test,
    max_k_test,
    max_s_test,
    max_sk_test,
    run_panel,
)


def load_iris():
    with resources.files("submardia").joinpath("data/iris.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    x = np.array([[float(r[k]) for k in list(r)[:4]] for r in rows])
    species = np.array([r["species"] for r in rows])
    return x, species


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--reps", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    x, species = load_iris()
    setosa = x[species == "setosa"]

    print("Mardia skewness on setosa subsets")
    for cols in [(4,), (1, 4), (2, 4), (3, 4), (1, 2, 3, 4)]:
        r = mardia_skewness_test(setosa[:, np.asarray(cols) - 1])
        print(f"  {cols!s:14} p = {r.p_value:.4f}")

    for label, data in (("setosa", setosa), ("all species", x)):
        print(f"\n{label} (n={len(data)})")
        print(f"  MK     p = {mardia_kurtosis_test(data).p_value:.3f}")
        print(f"  MS     p = {mardia_skewness_test(data).p_value:.3f}")
        for test in (max_s_test, max_k_test, max_sk_test):
            r = test(data, args.reps, args.seed)
            print(f"  {r.name:6} p = {r.p_value:.3f}  (se {r.mc_se:.3f}, argmax {r.subset})")
        panel = run_panel(data, args.reps, args.seed)
        for q in range(1, 5):
            ps = "  ".join(f"{b}_{q} {panel[f'{b}_{q}'].p_value:.3f}" for b in ("MaxS", "MaxK", "MaxSK"))
            print(f"  {ps}")


if __name__ == "__main__":
    main()
