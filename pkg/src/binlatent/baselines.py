"""Comparison estimators: alternating least squares with binary rounding, and
least squares given the true hidden matrix."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, RankError

__all__ = ["AlsState", "als", "oracle_ls", "round_binary"]


def round_binary(H):
    """Nearest binary matrix; exact halves round up."""
    return (np.asarray(H) >= 0.5).astype(float)


@dataclass
class AlsState:
    W: np.ndarray
    H_binary: np.ndarray
    objective: float
    iteration: int
    trace: list = field(default_factory=list)
    w_step_deltas: list = field(default_factory=list)
    restarts: int = 0
    converged: bool = False


def _objective(X, W, H):
    R = X - W.T @ H
    return float(np.einsum("ij,ij->", R, R))


def _repair_rank(H, rng):
    """Re-draw rows of ``H`` that do not add to its rank.  Returns (H, restarts)."""
    d = H.shape[0]
    restarts = 0
    for _ in range(100):
        kept = []
        bad = None
        for i in range(d):
            trial = H[kept + [i]]
            if np.linalg.matrix_rank(trial) == len(kept) + 1:
                kept.append(i)
            else:
                bad = i
                break
        if bad is None:
            return H, restarts
        H[bad] = (rng.random(H.shape[1]) < 0.5).astype(float)
        restarts += 1
    raise RankError("could not draw a full-rank binary H")


def als(X, d: int, max_iter: int = 500, seed=None, rtol: float = 1e-9, H0=None) -> AlsState:
    """ALS from a random binary start.

    Each iteration: least squares for ``W`` given ``H``, unconstrained least
    squares for ``H`` given ``W``, then entrywise rounding of ``H`` to {0, 1}.
    ``trace`` holds the objective after every rounding step and
    ``w_step_deltas`` the change caused by each ``W`` update (never positive).
    """
    X = np.asarray(X, dtype=float)
    m, n = X.shape
    if d > m:
        raise DimensionError(f"need d <= m, got d={d}, m={m}")
    rng = np.random.default_rng(seed)
    H = (rng.random((d, n)) < 0.5).astype(float) if H0 is None else np.array(H0, dtype=float)
    H, restarts = _repair_rank(H, rng)
    W = np.linalg.lstsq(H.T, X.T, rcond=None)[0]
    obj = _objective(X, W, H)
    state = AlsState(W=W, H_binary=H, objective=obj, iteration=0, trace=[obj], restarts=restarts)
    for it in range(1, max_iter + 1):
        H_hat = np.linalg.lstsq(W.T, X, rcond=None)[0]
        H = round_binary(H_hat)
        H, r = _repair_rank(H, rng)
        state.restarts += r
        before = _objective(X, W, H)
        W = np.linalg.lstsq(H.T, X.T, rcond=None)[0]
        new = _objective(X, W, H)
        state.w_step_deltas.append(new - before)
        state.trace.append(new)
        state.W, state.H_binary, state.iteration = W, H, it
        done = abs(obj - new) <= rtol * max(obj, np.finfo(float).tiny) or new == 0.0
        state.objective = obj = new
        if done:
            state.converged = True
            break
    return state


def oracle_ls(X, H_true) -> np.ndarray:
    """``argmin_W |X - W^T H|_F`` with the true hidden matrix."""
    X = np.asarray(X, dtype=float)
    H = np.asarray(H_true, dtype=float)
    if H.shape[1] != X.shape[1]:
        raise DimensionError("X and H must have the same number of columns")
    if np.linalg.matrix_rank(H) < H.shape[0]:
        raise RankError("hidden matrix is rank deficient")
    return np.linalg.lstsq(H.T, X.T, rcond=None)[0]
