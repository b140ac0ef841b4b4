"""Iteration counts of GaBP and Jacobi on augmented MMSE systems.

Noise is set to a multiple of the k/sqrt(n) threshold. Jacobi often diverges
on these indefinite systems; both columns are reported, nothing is asserted.
"""
import argparse
import os
from dataclasses import dataclass

import numpy as np

from gabp_mud.simulator import baseline_comparison, write_csv


@dataclass
class BaselineConfig:
    k: int = 6
    n: int = 24
    cases: int = 20
    seed: int = 3
    out: str = "results/gabp_vs_jacobi.csv"


def systems(cfg: BaselineConfig, factor):
    rng = np.random.default_rng([cfg.seed, int(factor * 1000)])
    for _ in range(cfg.cases):
        S = rng.choice([-1.0, 1.0], (cfg.n, cfg.k)) / np.sqrt(cfg.n)
        y = S @ rng.choice([-1.0, 1.0], cfg.k) + rng.standard_normal(cfg.n)
        yield S, factor * cfg.k / np.sqrt(cfg.n), y


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--k", type=int, default=BaselineConfig.k)
    p.add_argument("--n", type=int, default=BaselineConfig.n)
    p.add_argument("--cases", type=int, default=BaselineConfig.cases)
    p.add_argument("--seed", type=int, default=BaselineConfig.seed)
    p.add_argument("--out", default=BaselineConfig.out)
    cfg = BaselineConfig(**vars(p.parse_args()))
    rows = []
    print(f"{'psi/thr':>8} {'gabp_it':>8} {'jacobi_it':>10} {'jacobi_ok':>10}")
    for factor in (1.05, 1.5, 2.0, 4.0, 8.0):
        batch = baseline_comparison(systems(cfg, factor))
        for r in batch:
            r["noise_factor"] = factor
        rows += batch
        ok = [r for r in batch if r["jacobi_converged"]]
        jit = np.mean([r["jacobi_iterations"] for r in ok]) if ok else float("nan")
        print(f"{factor:8.3g} {np.mean([r['gabp_iterations'] for r in batch]):8.1f} "
              f"{jit:10.1f} {len(ok):6d}/{len(batch)}")
    os.makedirs(os.path.dirname(cfg.out) or ".", exist_ok=True)
    write_csv(cfg.out, rows)
    print(f"wrote {cfg.out}")


if __name__ == "__main__":
    main()
