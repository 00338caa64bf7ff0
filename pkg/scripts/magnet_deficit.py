"""Curie-Weiss magnet: how far below the exact <m^2> does the sampled
ensemble sit, and does the WFE term close the gap?

For each T, prints the exact thermal <m^2> and the sampled value for
w in {0, 0.5, 1, 2} x J/N^2.
"""
import argparse

from ensemble_boundary.analysis import magnetization_scan, natural_w_scale
from ensemble_boundary.models import build_curie_weiss
from ensemble_boundary.parallel import default_workers
from ensemble_boundary.ste import SamplerConfig


def main():
    p = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    p.add_argument("--N", type=int, default=12)
    p.add_argument("--J", type=float, default=1.0)
    p.add_argument("--temps", type=float, nargs="+", default=[0.05, 0.1, 0.3, 1.0])
    p.add_argument("--w", type=float, nargs="+", default=[0, 0.5, 1, 2], help="in units of J/N^2")
    p.add_argument("--samples", type=int, default=80000)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    model = build_curie_weiss(args.N, args.J)
    scale = natural_w_scale(model)
    cfg = SamplerConfig(n_samples=args.samples, n_chains=8, seed=args.seed)
    cells = magnetization_scan(model, args.temps, [w * scale for w in args.w], cfg, workers=default_workers())

    print(f"{'T':>6} {'w N^2/J':>8} {'vNTE':>8} {'STE':>8} {'SE':>7} {'deficit/SE':>10} {'r_hat':>6}")
    for c in cells:
        s = c.ste_m2
        z = (c.vnte_m2 - s.mean) / s.std_error if s.std_error > 0 else float("inf")
        print(f"{c.T:6.3g} {c.w / scale:8.2f} {c.vnte_m2:8.4f} {s.mean:8.4f} {s.std_error:7.4f} {z:10.1f} "
              f"{s.r_hat:6.3f}{'  FLAGGED' if s.flagged else ''}")


if __name__ == "__main__":
    main()
