#!/usr/bin/env python3
"""Trace how the fitted weight ratio moves with sidekick quality.

Fits duo temperatures for a ladder of sidekick accuracies, optionally
averaged over several simulator seeds, and prints t_large, t_small and
their ratio. The ratio should fall toward 1 as the sidekick approaches
the large member's accuracy.
"""

import argparse

import numpy as np

from duokit import SimSpec, fit_duo_temperatures, generate


def fit_ratio(acc_small, seed, args):
    spec = SimSpec(num_classes=args.classes, n_val=args.n_val, n_test=1,
                   acc_large=args.acc_large, acc_small=acc_small,
                   error_correlation=args.rho, seed=seed)
    val, _ = generate(spec)
    weights = fit_duo_temperatures(val).weights
    return weights.t_large, weights.t_small


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--classes", type=int, default=100)
    parser.add_argument("--n-val", type=int, default=5000)
    parser.add_argument("--acc-large", type=float, default=0.85)
    parser.add_argument("--acc-small", type=float, nargs="+",
                        default=[0.45, 0.55, 0.65, 0.75, 0.84])
    parser.add_argument("--rho", type=float, default=0.3)
    parser.add_argument("--seeds", type=int, default=3,
                        help="number of simulator seeds to average over")
    args = parser.parse_args()

    print(f"{'acc_small':>9}  {'t_large':>8}  {'t_small':>8}  {'ratio':>7}")
    for acc_small in args.acc_small:
        fits = np.array([fit_ratio(acc_small, seed, args)
                         for seed in range(args.seeds)])
        t_large, t_small = fits.mean(axis=0)
        print(f"{acc_small:9.2f}  {t_large:8.3f}  {t_small:8.3f}  "
              f"{t_large / t_small:7.3f}")


if __name__ == "__main__":
    main()
