"""Median error of every method across noise levels at a fixed sample size.

    python3 scripts/noise_sweep.py --n 100000 --sigma 0.2 0.6 1.0 --workers 4
"""

import argparse

import numpy as np

from binlatent.config import METHODS, ExperimentConfig
from binlatent.experiment import run_sweep, write_sweep_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--d", type=int, default=4)
    ap.add_argument("--m", type=int, default=12)
    ap.add_argument("--n", type=int, default=100_000)
    ap.add_argument("--sigma", type=float, nargs="+", default=[0.2, 0.6, 1.0])
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--methods", nargs="+", choices=METHODS, default=list(METHODS))
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out")
    args = ap.parse_args()

    cfg = ExperimentConfig(d=args.d, m=args.m, n=(args.n,), sigma=tuple(args.sigma),
                           seeds=tuple(range(args.seeds)), methods=tuple(args.methods))
    rows = run_sweep(cfg, workers=args.workers)
    if args.out:
        write_sweep_csv(args.out, rows)

    print("sigma  " + "".join(f"{m:>14s}" for m in cfg.methods))
    for s in cfg.sigma:
        cells = []
        for mth in cfg.methods:
            e = [r["error"] for r in rows if r["sigma"] == s and r["method"] == mth and r["status"] == "ok"]
            cells.append(f"{np.median(e):14.4f}" if e else f"{'failed':>14s}")
        print(f"{s:<7g}" + "".join(cells))


if __name__ == "__main__":
    main()
