"""Error of the spectral estimator against the sample size.

Prints the median aligned error per n and the least-squares slope of
log(median error) on log(n).

    python3 scripts/rate_sweep.py --n 1000 10000 100000 --seeds 10 --out rate.csv
"""

import argparse

import numpy as np

from binlatent.config import ExperimentConfig
from binlatent.experiment import run_sweep, write_sweep_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--d", type=int, default=3)
    ap.add_argument("--m", type=int, default=10)
    ap.add_argument("--n", type=int, nargs="+", default=[1000, 10_000, 100_000])
    ap.add_argument("--sigma", type=float, default=0.3)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out")
    args = ap.parse_args()

    cfg = ExperimentConfig(d=args.d, m=args.m, n=tuple(args.n), sigma=(args.sigma,),
                           seeds=tuple(range(args.seeds)), methods=("spectral",))
    rows = run_sweep(cfg, workers=args.workers)
    if args.out:
        write_sweep_csv(args.out, rows)

    med = []
    for n in cfg.n:
        errs = [r["error"] for r in rows if r["n"] == n and r["status"] == "ok"]
        med.append(np.median(errs) if errs else np.nan)
        print(f"n={n:>9d}  median error {med[-1]:.4f}  ({len(errs)}/{len(cfg.seeds)} ok)")
    ok = np.isfinite(med)
    if ok.sum() >= 2:
        slope = np.polyfit(np.log(np.array(cfg.n)[ok]), np.log(np.array(med)[ok]), 1)[0]
        print(f"log-log slope {slope:.3f}")


if __name__ == "__main__":
    main()
