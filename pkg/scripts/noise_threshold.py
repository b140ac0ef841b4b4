"""GaBP-MMSE convergence rate as the chip noise crosses k/sqrt(n).

Above the threshold convergence is guaranteed; below it the table shows
what happens without the guarantee.
"""
import argparse

import numpy as np

from gabp_mud.detectors import detect_mmse
from gabp_mud.gabp import SolverConfig, SolverError


def rate(k, n, psi, runs, seed, max_iterations):
    rng = np.random.default_rng(seed)
    ok = iters = 0
    for _ in range(runs):
        S = rng.choice([-1.0, 1.0], (n, k)) / np.sqrt(n)
        y = rng.standard_normal(n)
        try:
            res = detect_mmse(S, psi, y, config=SolverConfig(max_iterations=max_iterations)).result
        except SolverError:
            continue
        ok += res.converged
        iters += res.iterations if res.converged else 0
    return ok / runs, iters / max(ok, 1)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--k", type=int, default=8)
    p.add_argument("--n", type=int, default=16)
    p.add_argument("--runs", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iterations", type=int, default=2000)
    args = p.parse_args()
    thr = args.k / np.sqrt(args.n)
    print(f"# k={args.k} n={args.n} threshold k/sqrt(n)={thr:.4g}")
    print(f"{'psi/thr':>8} {'conv_rate':>10} {'mean_it':>8}")
    for factor in (0.1, 0.25, 0.5, 0.75, 1.0, 1.01, 1.25, 2.0):
        r, it = rate(args.k, args.n, factor * thr, args.runs, args.seed, args.max_iterations)
        print(f"{factor:8.3g} {r:10.2f} {it:8.1f}")


if __name__ == "__main__":
    main()
