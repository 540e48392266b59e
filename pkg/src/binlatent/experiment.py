"""Grid runs of the estimators on synthetic instances."""

from __future__ import annotations

import csv
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .baselines import als, oracle_ls
from .config import ExperimentConfig
from .datagen import InstanceSpec, make_instance
from .eigensolver import SolverConfig
from .errors import BinLatentError, DataError, DimensionError, NumericalError
from .io import fmt_float
from .learn import admixture_estimate, aligned_error, algorithm1, algorithm2, wls_refine

__all__ = ["SWEEP_COLUMNS", "run_point", "run_sweep", "write_sweep_csv", "spectral_estimate", "method_seed"]

SWEEP_COLUMNS = ("n", "sigma", "seed", "method", "error", "wall_time",
                 "eigenpair_count", "candidate_count", "config_hash", "status")


def method_seed(seed: int, n: int, sigma: float) -> np.random.SeedSequence:
    """Seed for randomized estimators; a different stream from the instance's."""
    return np.random.SeedSequence([int(seed), int(n), int(round(sigma * 1e6)), 7])


def spectral_estimate(X, d, sigma, observation="gaussian", lambda_thresh=None, solver=None, denoise=True):
    """Route to the right spectral pipeline.  ``sigma=None`` (or ``d=None``) is
    estimated from the data; ``sigma == 0`` means noiseless."""
    if observation == "binomial":
        return admixture_estimate(X, d, denoise=denoise, solver=solver)
    if sigma is not None and sigma == 0:
        return algorithm1(X, solver=solver)
    return algorithm2(X, d=d, sigma=sigma, lambda_thresh=lambda_thresh, solver=solver)


def _status(exc):
    if isinstance(exc, NumericalError):
        return f"numerical:{type(exc).__name__}"
    if isinstance(exc, (DataError, DimensionError, BinLatentError, ValueError)):
        return f"data:{type(exc).__name__}"
    return f"error:{type(exc).__name__}"


def run_point(cfg: ExperimentConfig, n: int, sigma: float, seed: int) -> list:
    """All methods of ``cfg`` on one instance.  Returns one dict per method."""
    spec = InstanceSpec(d=cfg.d, m=cfg.m, n=n, sigma=sigma, seed=seed, observation=cfg.observation,
                        w_law="dirichlet" if cfg.observation == "binomial" else "sphere", alpha=cfg.alpha)
    inst = make_instance(spec)
    solver = SolverConfig(n_init=cfg.n_init, seed=cfg.solver_seed)
    base = {"n": n, "sigma": sigma, "seed": seed, "config_hash": cfg.config_hash()}
    rows = []
    spectral, spectral_time, spectral_exc = None, 0.0, None
    if any(mth.startswith("spectral") for mth in cfg.methods):
        t0 = time.perf_counter()
        try:
            spectral = spectral_estimate(inst.X, cfg.d, sigma, cfg.observation, cfg.lambda_thresh, solver,
                                         cfg.denoise)
        except Exception as exc:  # recorded per row; the sweep goes on
            spectral_exc = exc
        spectral_time = time.perf_counter() - t0
    for method in cfg.methods:
        row = dict(base, method=method, error=float("nan"), wall_time=0.0, eigenpair_count=None,
                   candidate_count=None, status="ok")
        t0 = time.perf_counter()
        try:
            if method.startswith("spectral"):
                if spectral_exc is not None:
                    raise spectral_exc
                W_hat = spectral.W_hat
                row["eigenpair_count"] = len(spectral.eigenpairs)
                row["candidate_count"] = len(spectral.candidates)
                if method == "spectral+wls":
                    if sigma <= 0 or cfg.observation != "gaussian":
                        raise DataError("the weighted least-squares step needs Gaussian noise with sigma > 0")
                    W_hat = wls_refine(inst.X, W_hat, sigma, K_top=cfg.wls_k)
            elif method == "als":
                W_hat = als(inst.X, cfg.d, max_iter=cfg.als_max_iter, seed=method_seed(seed, n, sigma)).W
            else:
                W_hat = oracle_ls(inst.X, inst.H)
            row["error"] = aligned_error(W_hat, inst.W)[0]
        except Exception as exc:
            row["status"] = _status(exc)
        elapsed = time.perf_counter() - t0
        row["wall_time"] = elapsed + (spectral_time if method.startswith("spectral") else 0.0)
        rows.append(row)
    return rows


def _grid(cfg):
    return [(n, s, seed) for n in cfg.n for s in cfg.sigma for seed in cfg.seeds]


def run_sweep(cfg: ExperimentConfig, workers: int | None = None) -> list:
    """Rows in grid order (n, then sigma, then seed, then method) for any worker count."""
    grid = _grid(cfg)
    workers = cfg.workers if workers is None else workers
    if workers <= 1 or len(grid) == 1:
        chunks = [run_point(cfg, *pt) for pt in grid]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(run_point, [cfg] * len(grid), *zip(*grid)))
    return [row for chunk in chunks for row in chunk]


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return fmt_float(v)
    return str(v)


def write_sweep_csv(path_or_file, rows) -> None:
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for row in rows:
            w.writerow([_cell(row[c]) for c in SWEEP_COLUMNS])
    finally:
        if own:
            fh.close()
