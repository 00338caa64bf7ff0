"""Cool a case-I and a case-II molecule and compare the P_A histograms.

Case I (w = 2 w*) should split into members near 0 and near 1; case II
(w = w*/2) should pile up around 1/2. Prints text histograms.
"""
import argparse

from ensemble_boundary.analysis import conversion_fraction_stats, critical_w
from ensemble_boundary.models import build_enantiomer
from ensemble_boundary.ste import SamplerConfig
from ensemble_boundary.vnte import ThermalParams


def show(title, stats, width=50):
    h = stats.histogram
    print(f"\n{title}: <P_A> = {stats.estimate.mean:.4f} +- {stats.estimate.std_error:.4f}, "
          f"localized = {stats.localized_fraction:.4f}, r_hat = {stats.estimate.r_hat:.2f}")
    for lo, hi, m in zip(h.edges[:-1], h.edges[1:], h.masses):
        print(f"  [{lo:4.2f}, {hi:4.2f})  {'#' * int(round(m * width)):<{width}} {m:.4f}")


def main():
    p = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    p.add_argument("--T", type=float, nargs="+", default=[1.0, 0.1, 0.01])
    p.add_argument("--N", type=int, default=10)
    p.add_argument("--samples", type=int, default=40000)
    p.add_argument("--bins", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    wc = critical_w(0.0, 1.0, 1.0, args.N)
    cfg = SamplerConfig(n_samples=args.samples, n_chains=8, seed=args.seed)
    for label, w in (("case I, w = 2 w*", 2 * wc), ("case II, w = w*/2", wc / 2)):
        model = build_enantiomer(0.0, 1.0, 1.0, w, args.N)
        for T in args.T:
            show(f"{label}, T = {T}", conversion_fraction_stats(model, ThermalParams(T), cfg, bins=args.bins))


if __name__ == "__main__":
    main()
