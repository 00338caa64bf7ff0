"""Where does the ensemble stop converting half the substrate?

Scans w across the critical coupling for several temperatures and prints,
per cell, the verdict, mean P_A and the fraction of members localized near
0 or 1. Writes the table as CSV if --out is given.

    python scripts/phase_boundary.py --N 10 --out boundary.csv
"""
import argparse
import csv

import numpy as np

from ensemble_boundary.analysis import boundary_scan, critical_w
from ensemble_boundary.parallel import default_workers
from ensemble_boundary.ste import SamplerConfig


def main():
    p = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--d", type=float, default=1.0)
    p.add_argument("--N", type=int, default=10)
    p.add_argument("--temps", type=float, nargs="+", default=[0.01, 0.1, 1.0])
    p.add_argument("--points", type=int, default=13)
    p.add_argument("--samples", type=int, default=20000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    args = p.parse_args()

    wc = critical_w(0.0, args.delta, args.d, args.N)
    w_grid = np.linspace(0, 3 * wc, args.points)
    cfg = SamplerConfig(n_samples=args.samples, n_chains=8, seed=args.seed)
    cells = boundary_scan(0.0, args.delta, args.d, args.N, w_grid, args.temps, cfg, workers=default_workers())

    print(f"w* = {wc:.6g}")
    print(f"{'w/w*':>6} {'T':>6} {'verdict':>8} {'<P_A>':>8} {'SE':>7} {'localized':>9} {'r_hat':>7}")
    for c in sorted(cells, key=lambda c: (c.T, c.w)):
        print(f"{c.w / wc:6.2f} {c.T:6.3g} {str(c.verdict):>8} {c.conversion.mean:8.4f} "
              f"{c.conversion.std_error:7.4f} {c.bimodality:9.4f} {c.conversion.r_hat:7.3f}")

    if args.out:
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["w", "T", "verdict", "mean_P_A", "std_error", "localized", "r_hat"])
            for c in cells:
                writer.writerow([c.w, c.T, c.verdict, c.conversion.mean, c.conversion.std_error, c.bimodality,
                                 c.conversion.r_hat])


if __name__ == "__main__":
    main()
