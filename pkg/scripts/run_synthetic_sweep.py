#!/usr/bin/env python3
"""Sweep sidekick quality on synthetic duos and report test metrics.

For each sidekick accuracy in a ladder, generates a fresh world, tunes
the duo weights on the validation split, and evaluates single / tuned /
unweighted / uq-only modes on the test split. Prints a table and can
dump the full rows as CSV for plotting.
"""

import argparse
import csv
import sys

from duokit import (SimSpec, SingleScaled, UnweightedDuo, UQOnlyDuo,
                    WeightedDuo, evaluate, fit_duo_temperatures, generate)

COLUMNS = ("acc_small", "mode", "t_large", "t_small", "accuracy", "nll",
           "ece", "auroc", "aurc", "sac_98")


def run_one(acc_small, args):
    spec = SimSpec(num_classes=args.classes, n_val=args.n_val,
                   n_test=args.n_test, acc_large=args.acc_large,
                   acc_small=acc_small, error_correlation=args.rho,
                   margin=args.margin, seed=args.seed)
    val, test = generate(spec)
    fitted = fit_duo_temperatures(val).weights
    modes = [
        ("single", SingleScaled(1.0), 1.0, 0.0),
        ("weighted", WeightedDuo(fitted), fitted.t_large, fitted.t_small),
        ("unweighted", UnweightedDuo(), 0.5, 0.5),
        ("uq_only", UQOnlyDuo(fitted), fitted.t_large, fitted.t_small),
    ]
    rows = []
    for name, mode, t_large, t_small in modes:
        row = evaluate(test, mode)
        rows.append({
            "acc_small": acc_small,
            "mode": name,
            "t_large": round(t_large, 4),
            "t_small": round(t_small, 4),
            "accuracy": round(row.accuracy, 4),
            "nll": round(row.nll, 4),
            "ece": round(row.ece, 4),
            "auroc": round(row.auroc, 4),
            "aurc": round(row.aurc, 5),
            "sac_98": round(row.sac[0.98], 4),
        })
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--classes", type=int, default=100)
    parser.add_argument("--n-val", type=int, default=5000)
    parser.add_argument("--n-test", type=int, default=20000)
    parser.add_argument("--acc-large", type=float, default=0.85)
    parser.add_argument("--acc-small", type=float, nargs="+",
                        default=[0.40, 0.55, 0.70, 0.80])
    parser.add_argument("--rho", type=float, default=0.3)
    parser.add_argument("--margin", type=float, default=3.5)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", help="also write rows as CSV here")
    args = parser.parse_args()

    rows = []
    for acc_small in args.acc_small:
        rows.extend(run_one(acc_small, args))

    widths = {c: max(len(c), *(len(str(r[c])) for r in rows)) for c in COLUMNS}
    print("  ".join(c.rjust(widths[c]) for c in COLUMNS))
    for row in rows:
        print("  ".join(str(row[c]).rjust(widths[c]) for c in COLUMNS))

    if args.out:
        with open(args.out, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=COLUMNS)
            writer.writeheader()
            writer.writerows(rows)
        print(f"wrote {len(rows)} rows to {args.out}", file=sys.stderr)


if __name__ == "__main__":
    main()
