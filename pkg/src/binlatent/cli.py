"""Command-line driver.

Exit status: 0 success, 2 usage error, 3 bad input data or files,
4 numerical failure (no convergence, rank deficiency, ...).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .baselines import als, oracle_ls
from .config import METHODS, ExperimentConfig
from .datagen import InstanceSpec, default_gaussian_law, gen_H_gaussian_round, make_instance
from .eigensolver import SolverConfig, enumerate_eigenpairs
from .errors import BinLatentError, DataError, DimensionError, NumericalError
from .experiment import run_sweep, spectral_estimate, write_sweep_csv
from .io import (
    fmt_float,
    parse_assignments,
    read_config,
    read_matrix,
    read_tensor_text,
    write_json,
    write_matrix,
    write_matrix_csv,
)
from .learn import aligned_error, check_conditions, wls_refine
from .moments import full_support, latent_population_moments

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 2, 3, 4


class UsageError(Exception):
    pass


def _emit_error(code, kind, exc):
    print(json.dumps({"error": kind, "type": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
    return code


# ---------------------------------------------------------------------------
# commands


def cmd_generate(args) -> int:
    spec = InstanceSpec(d=args.d, m=args.m, n=args.n, sigma=args.sigma, seed=args.seed,
                        observation=args.observation, rigid=args.rigid,
                        w_law="dirichlet" if args.observation == "binomial" else "sphere", alpha=args.alpha)
    inst = make_instance(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    x_name = "X.bin" if args.format == "bin" else "X.csv"
    write_matrix(out / x_name, inst.X)
    write_matrix_csv(out / "W.csv", inst.W)
    write_matrix_csv(out / "H.csv", inst.H)
    write_json(out / "instance.json", {"spec": spec.to_dict(), "X": x_name, "shapes": {
        "X": list(inst.X.shape), "W": list(inst.W.shape), "H": list(inst.H.shape)}})
    return EXIT_OK


def _solver(args):
    return SolverConfig(n_init=args.n_init, seed=args.solver_seed)


def cmd_learn(args) -> int:
    X = read_matrix(args.X)
    method = args.method
    d, sigma = args.d, args.sigma
    meta = {"method": method, "input": Path(args.X).name}
    if method == "oracle":
        if args.H is None:
            raise UsageError("method oracle needs --H")
        W_hat = oracle_ls(X, read_matrix(args.H))
    elif method == "als":
        if d is None:
            raise UsageError("method als needs --d")
        state = als(X, d, max_iter=args.max_iter, seed=args.seed)
        W_hat = state.W
        meta.update(objective=state.objective, iterations=state.iteration, converged=state.converged,
                    restarts=state.restarts, seed=args.seed)
    else:
        observation = "binomial" if args.binomial else "gaussian"
        if observation == "binomial" and d is None:
            raise UsageError("--binomial needs --d")
        est = spectral_estimate(X, d, sigma, observation, args.lambda_thresh, _solver(args), not args.no_denoise)
        W_hat = est.W_hat
        info = est.metadata()
        info["pipeline"] = info.pop("method")
        meta.update(info)
        if method == "spectral+wls":
            s = np.sqrt(est.info["sigma2"])
            if observation != "gaussian" or s <= 0:
                raise DataError("spectral+wls needs Gaussian noise with sigma > 0")
            W_hat = wls_refine(X, W_hat, s, K_top=args.wls_k)
        meta["solver"] = {"n_init": args.n_init, "seed": args.solver_seed}
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_matrix_csv(out.with_suffix(".csv"), W_hat)
    write_json(out.with_suffix(".json"), meta)
    return EXIT_OK


def cmd_eval(args) -> int:
    W_hat, W = read_matrix(args.W_hat), read_matrix(args.W_true)
    err, perm, row_err = aligned_error(W_hat, W)
    report = {"error": err, "permutation": perm.tolist(), "row_errors": row_err.tolist()}
    text = json.dumps({k: report[k] for k in sorted(report)}, indent=2)
    if args.out:
        write_json(args.out, report)
    print(text)
    return EXIT_OK


def _config_from_args(args) -> ExperimentConfig:
    values = read_config(args.config) if args.config else {}
    try:
        values.update(parse_assignments(args.set or []))
        return ExperimentConfig.from_mapping(values)
    except DataError as exc:  # bad keys, empty grids and unknown methods are usage errors
        raise UsageError(str(exc)) from None


def cmd_sweep(args) -> int:
    cfg = _config_from_args(args)
    rows = run_sweep(cfg, workers=args.workers)
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        write_sweep_csv(out, rows)
        Path(str(out) + ".config").write_text("\n".join(cfg.to_lines()) + "\n")
    else:
        write_sweep_csv(sys.stdout, rows)
    failed = [r for r in rows if r["status"] != "ok"]
    if not failed:
        return EXIT_OK
    print(f"{len(failed)} of {len(rows)} runs failed", file=sys.stderr)
    return EXIT_NUMERICAL if any(r["status"].startswith("numerical") for r in failed) else EXIT_DATA


def _latent_from_args(args):
    if args.H is not None:
        H = read_matrix(args.H)
        atoms, inv = np.unique(H.T, axis=0, return_inverse=True)
        return latent_population_moments(atoms, np.bincount(inv.ravel()) / H.shape[1])
    d = args.d
    if args.law == "gmm":
        return latent_population_moments(np.eye(d), np.full(d, 1.0 / d))
    if args.law == "uniform":
        return latent_population_moments(full_support(d), np.full(2**d, 2.0**-d))
    law = default_gaussian_law(d)
    H = gen_H_gaussian_round(args.samples, law.a, law.R, args.seed)
    atoms, inv = np.unique(H.T, axis=0, return_inverse=True)
    return latent_population_moments(atoms, np.bincount(inv.ravel()) / H.shape[1])


def cmd_conditions(args) -> int:
    if args.H is None and args.d is None:
        raise UsageError("conditions-check needs --H or --d")
    rep = check_conditions(_latent_from_args(args), n_probe=args.n_probe, seed=args.seed)
    out = rep.as_dict()
    if args.out:
        write_json(args.out, out)
    print(json.dumps(out, indent=2, sort_keys=True, default=float))
    return EXIT_OK


def cmd_tensor_eig(args) -> int:
    T = read_tensor_text(args.tensor)
    pairs = enumerate_eigenpairs(T, _solver(args))
    lines = [",".join(["lambda", "stability", "residual"] + [f"u{i + 1}" for i in range(T.dim)])]
    for p in pairs:
        lines.append(",".join([fmt_float(p.lam), p.stability.value, fmt_float(p.residual)]
                              + [fmt_float(x) for x in p.u]))
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _positive_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return v


def _nonneg_float(s):
    v = float(s)
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative number, got {s}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="binlatent", description="Spectral learning of binary latent variable models.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="draw a synthetic instance")
    g.add_argument("--d", type=_positive_int, required=True)
    g.add_argument("--m", type=_positive_int, required=True)
    g.add_argument("--n", type=_positive_int, required=True)
    g.add_argument("--sigma", type=_nonneg_float, default=0.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--observation", choices=("gaussian", "binomial"), default="gaussian")
    g.add_argument("--alpha", type=float, default=1.0, help="Dirichlet parameter for binomial instances")
    g.add_argument("--rigid", action="store_true", help="start H with all e_i and e_i + e_j")
    g.add_argument("--format", choices=("csv", "bin"), default="csv")
    g.add_argument("--out", required=True, help="output directory")
    g.set_defaults(func=cmd_generate)

    lr = sub.add_parser("learn", help="estimate W from a sample matrix")
    lr.add_argument("--X", required=True, help="samples, rows = features (.csv or .bin)")
    lr.add_argument("--method", choices=METHODS, default="spectral")
    lr.add_argument("--d", type=_positive_int)
    lr.add_argument("--sigma", type=_nonneg_float)
    lr.add_argument("--lambda-thresh", type=_nonneg_float)
    lr.add_argument("--binomial", action="store_true", help="genotype data: denoised moments, likelihood selection")
    lr.add_argument("--no-denoise", action="store_true", help="with --binomial, use the raw moments")
    lr.add_argument("--H", help="true hidden matrix (method oracle)")
    lr.add_argument("--n-init", type=_positive_int)
    lr.add_argument("--solver-seed", type=int, default=0)
    lr.add_argument("--seed", type=int, default=0, help="ALS starting point")
    lr.add_argument("--max-iter", type=_positive_int, default=500)
    lr.add_argument("--wls-k", type=_positive_int, default=6)
    lr.add_argument("--out", required=True, help="output prefix; writes PREFIX.csv and PREFIX.json")
    lr.set_defaults(func=cmd_learn)

    ev = sub.add_parser("eval", help="permutation-aligned error between two weight matrices")
    ev.add_argument("--W-hat", dest="W_hat", required=True)
    ev.add_argument("--W-true", dest="W_true", required=True)
    ev.add_argument("--out")
    ev.set_defaults(func=cmd_eval)

    sw = sub.add_parser("sweep", help="grid of (n, sigma, seed, method) runs to CSV")
    sw.add_argument("--config", help="key = value file")
    sw.add_argument("--set", nargs="*", metavar="KEY=VALUE", help="overrides, e.g. n=1000,10000 seeds=0:10")
    sw.add_argument("--workers", type=_positive_int)
    sw.add_argument("--out", help="CSV path (stdout if omitted)")
    sw.set_defaults(func=cmd_sweep)

    cc = sub.add_parser("conditions-check", help="non-degeneracy diagnostics for a hidden law")
    cc.add_argument("--H", help="binary hidden matrix; its empirical law is checked")
    cc.add_argument("--d", type=_positive_int)
    cc.add_argument("--law", choices=("gaussian", "gmm", "uniform"), default="gaussian")
    cc.add_argument("--samples", type=_positive_int, default=200_000)
    cc.add_argument("--n-probe", type=_positive_int, default=2000)
    cc.add_argument("--seed", type=int, default=0)
    cc.add_argument("--out")
    cc.set_defaults(func=cmd_conditions)

    te = sub.add_parser("tensor-eig", help="all eigenpairs of a symmetric tensor")
    te.add_argument("--tensor", required=True, help="text file: d, then d^3 entries")
    te.add_argument("--n-init", type=_positive_int)
    te.add_argument("--solver-seed", type=int, default=0)
    te.add_argument("--out")
    te.set_defaults(func=cmd_tensor_eig)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits with 2 on usage errors, 0 on --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        return _emit_error(EXIT_USAGE, "usage", exc)
    except NumericalError as exc:
        return _emit_error(EXIT_NUMERICAL, "numerical", exc)
    except (DataError, DimensionError, BinLatentError, OSError, ValueError) as exc:
        return _emit_error(EXIT_DATA, "data", exc)


if __name__ == "__main__":
    sys.exit(main())
