"""Admixture proportions from genotype counts, with and without moment denoising.

Genotypes are Binomial(2, F) / 2 with F = W^T H, where the columns of W are
Dirichlet admixture proportions and H holds population allele frequencies.

    python3 scripts/admixture.py --d 3 --m 20 --n 100000 --seeds 5
"""

import argparse

import numpy as np

from binlatent.datagen import InstanceSpec, make_instance
from binlatent.errors import BinLatentError
from binlatent.learn import admixture_estimate, aligned_error


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--d", type=int, default=3)
    ap.add_argument("--m", type=int, default=20)
    ap.add_argument("--n", type=int, default=100_000)
    ap.add_argument("--alpha", type=float, default=1.0)
    ap.add_argument("--seeds", type=int, default=5)
    args = ap.parse_args()

    errs = {True: [], False: []}
    for seed in range(args.seeds):
        spec = InstanceSpec(d=args.d, m=args.m, n=args.n, observation="binomial", w_law="dirichlet",
                            alpha=args.alpha, seed=seed)
        inst = make_instance(spec)
        line = [f"seed {seed}"]
        for denoise in (True, False):
            try:
                est = admixture_estimate(inst.X, args.d, denoise=denoise)
                e = aligned_error(est.W_hat, inst.W)[0]
            except BinLatentError as exc:
                e = np.nan
                line.append(f"({type(exc).__name__})")
            errs[denoise].append(e)
            line.append(f"{'denoised' if denoise else 'raw'} {e:.4f}")
        print("  ".join(line))
    print(f"median  denoised {np.nanmedian(errs[True]):.4f}  raw {np.nanmedian(errs[False]):.4f}")


if __name__ == "__main__":
    main()
