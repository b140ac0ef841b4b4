"""BER of MF, decorrelator and MMSE against chip noise variance.

Writes one CSV row per (sigma2, detector) plus a gnuplot data file per
detector. Example::

    python scripts/ber_sweep.py --k 8 --n 16 --frames 500 --out results/ber
"""
import argparse
import os
from dataclasses import dataclass, field

import numpy as np

from gabp_mud.gabp import SolverConfig
from gabp_mud.simulator import (CSV_COLUMNS, Scenario, run_metadata, run_trials, summarize,
                                write_csv, write_plot_data)


@dataclass
class SweepConfig:
    k: int = 8
    n: int = 16
    frames: int = 300
    seed: int = 1
    sigma2: list = field(default_factory=lambda: [2.0, 1.0, 0.5, 0.25, 0.125])
    detectors: tuple = ("mf", "zf", "mmse")
    damping: float = 0.5
    out: str = "results/ber"


def sweep(cfg: SweepConfig):
    solver = SolverConfig(damping=cfg.damping)
    rows = []
    for s2 in cfg.sigma2:
        sc = Scenario(k=cfg.k, n=cfg.n, noise=s2, num_frames=cfg.frames, rng_seed=cfg.seed)
        rows += summarize(run_trials(sc, cfg.detectors, solver), sc.scenario_hash(), batch=s2)
    return rows


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--k", type=int, default=SweepConfig.k)
    p.add_argument("--n", type=int, default=SweepConfig.n)
    p.add_argument("--frames", type=int, default=SweepConfig.frames)
    p.add_argument("--seed", type=int, default=SweepConfig.seed)
    p.add_argument("--sigma2", type=float, nargs="+")
    p.add_argument("--damping", type=float, default=SweepConfig.damping)
    p.add_argument("--out", default=SweepConfig.out)
    args = p.parse_args()
    cfg = SweepConfig(k=args.k, n=args.n, frames=args.frames, seed=args.seed,
                      damping=args.damping, out=args.out)
    if args.sigma2:
        cfg.sigma2 = args.sigma2
    os.makedirs(os.path.dirname(cfg.out) or ".", exist_ok=True)
    rows = sweep(cfg)
    write_csv(cfg.out + ".csv", rows, CSV_COLUMNS)
    for kind in cfg.detectors:
        pts = [(r["batch"], r["ber"]) for r in rows if r["detector"] == kind]
        write_plot_data(f"{cfg.out}_{kind}.dat", pts, "sigma2", "ber")
    meta = run_metadata(Scenario(k=cfg.k, n=cfg.n, rng_seed=cfg.seed))
    print(f"# k={cfg.k} n={cfg.n} frames={cfg.frames} rng={meta['rng']}")
    print(f"{'sigma2':>8} " + " ".join(f"{k:>9}" for k in cfg.detectors))
    for s2 in cfg.sigma2:
        bers = [r["ber"] for r in rows if r["batch"] == s2]
        print(f"{s2:8.4g} " + " ".join(f"{b:9.4f}" for b in bers))
    print(f"wrote {cfg.out}.csv")


if __name__ == "__main__":
    main()
