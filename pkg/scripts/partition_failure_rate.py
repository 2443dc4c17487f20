"""Walk failure rate and switch-gap statistics for the partition algorithm.

Inside the regime (C(eps) < J) the walk should never fail.  The second table
runs the documented log x = 1e4, eps = 1e-3 scale, where C(eps) > J.
"""
import argparse

import numpy as np

from buchsieve import partition as P
from buchsieve.sieve_setup import setup_params


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--J", type=int, nargs="+", default=[5, 8, 10, 12, 16, 20])
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    print(f"{'J':>3} {'C':>3} {'fail':>6} {'gap_max':>7} {'gap_p99':>7} {'switches':>8}")
    for J in args.J:
        params = P.regime_params(J)
        rng = np.random.default_rng(args.seed + J)
        fails, gaps, nsw = 0, [], []
        for _ in range(args.n):
            inp = P.random_instance(params, rng)
            try:
                res = P.run_partition(inp)
            except P.WalkFailure:
                fails += 1
                continue
            gaps.extend(np.diff(res.switches).tolist())
            nsw.append(len(res.switches))
        g = np.array(gaps) if gaps else np.zeros(1)
        print(f"{J:>3} {P.terminal_constant(params):>3} {fails / args.n:>6.3f} {g.max():>7} "
              f"{np.percentile(g, 99):>7.1f} {np.mean(nsw):>8.2f}")

    p = setup_params(1e4, epsilon=1e-3)
    print(f"\nlog x = 1e4, eps = 1e-3: J = {p.J}, C(eps) = {P.terminal_constant(p)}, "
          f"failure rate = {P.failure_rate(p, args.n, args.seed):.3f}")


if __name__ == "__main__":
    main()
