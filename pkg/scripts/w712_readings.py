"""W712 under both readings of its asymptotic-range conditions.

Prints upper, midpoint and Monte Carlo figures side by side against the
target bound, which only the p2p3 reading meets.
"""
import argparse

from buchsieve.cli import load_targets
from buchsieve.integrator import deficiency
from buchsieve.regions import W712_READINGS, build_region


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--gamma", type=float, default=1 / 19)
    ap.add_argument("--samples", type=int, default=2_000_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    bound = load_targets()["regions"]["W712"]
    print(f"target bound {bound:.7f}  (x1.02 = {bound * 1.02:.7f})")
    print(f"{'reading':<8} {'upper':>10} {'midpoint':>10} {'mc':>10} {'mc_err':>9}")
    for reading in W712_READINGS:
        r = build_region("W712", args.gamma, reading)
        up = deficiency(r, "upper")
        mid = deficiency(r, "midpoint")
        mc = deficiency(r, "monte_carlo", samples=args.samples, seed=args.seed)
        print(f"{reading:<8} {up.upper:>10.6f} {mid.value:>10.6f} {mc.value:>10.6f} {mc.stderr:>9.6f}")


if __name__ == "__main__":
    main()
