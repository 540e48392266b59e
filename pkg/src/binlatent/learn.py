"""Spectral estimators for the weight matrix of a binary latent variable model.

Pipeline, noiseless case (:func:`algorithm1`)::

    moments -> whitening -> whitened tensor -> eigenpairs
            -> candidates K u / lam with lam >= 1 -> binary filter -> pseudo-inverse

Noisy case (:func:`algorithm2`): noise-corrected moments on the first half of
the sample, candidates with ``lam >= 1 - lambda_thresh``, and a
Kolmogorov-Smirnov goodness of fit on the held-out half against the
two-component mixture each candidate predicts.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.special import logsumexp, ndtr

from .eigensolver import EigenpairSet, SolverConfig, enumerate_eigenpairs
from .errors import DataError, DimensionError, RankError, SurvivorCountError
from .moments import (
    LatentMoments,
    empirical_moments,
    estimate_d_sigma,
    full_support,
    noise_correct,
    numerical_rank,
    split_sample,
    whiten,
    whitened_tensor,
)
from .tensor import Eigenpair, SymTensor3, tangent_basis

log = logging.getLogger(__name__)

__all__ = [
    "Candidate",
    "Selection",
    "Gmm2Params",
    "ModelEstimate",
    "ConditionReport",
    "build_candidates",
    "filter_exact",
    "gmm2_cdf",
    "ks_score",
    "rounding_score",
    "select_by_score",
    "recover_W",
    "algorithm1",
    "algorithm2",
    "wls_refine",
    "likelihood_select",
    "expected_rounding",
    "check_conditions",
    "aligned_error",
    "default_lambda_thresh",
    "admixture_estimate",
]


@dataclass(frozen=True, eq=False)
class Candidate:
    v: np.ndarray
    lam: float
    source: Eigenpair
    score: float | None = None

    def with_score(self, score):
        return Candidate(v=self.v, lam=self.lam, source=self.source, score=float(score))


@dataclass(frozen=True, eq=False)
class Selection:
    chosen: list
    W_hat: np.ndarray


@dataclass(frozen=True)
class Gmm2Params:
    """``(1 - weight1) N(0, var) + weight1 N(1, var)``."""

    weight1: float
    var: float

    @classmethod
    def for_candidate(cls, cand: Candidate, sigma: float) -> "Gmm2Params":
        return cls(weight1=1.0 / cand.lam**2, var=sigma**2 * float(cand.v @ cand.v))


@dataclass(eq=False)
class ModelEstimate:
    W_hat: np.ndarray
    selection: Selection
    candidates: list
    eigenpairs: EigenpairSet
    K: np.ndarray
    info: dict = field(default_factory=dict)

    def metadata(self) -> dict:
        chosen = {id(c) for c in self.selection.chosen}
        return {
            **self.info,
            "candidates": [
                {
                    "lambda": c.lam,
                    "score": c.score,
                    "stability": c.source.stability.value,
                    "residual": c.source.residual,
                    "selected": id(c) in chosen,
                }
                for c in self.candidates
            ],
            "eigenpair_count": len(self.eigenpairs),
            "candidate_count": len(self.candidates),
        }


def default_lambda_thresh(n_half: int) -> float:
    return 5.0 / np.sqrt(n_half)


def build_candidates(pairs, K, lambda_thresh: float = 0.0) -> list:
    """``K u / lam`` for every pair with ``lam >= 1 - lambda_thresh``."""
    if lambda_thresh < 0:
        raise DataError("lambda_thresh must be non-negative")
    K = np.asarray(K, dtype=float)
    out = []
    for p in pairs:
        if p.lam > 0 and p.lam >= 1.0 - lambda_thresh:
            out.append(Candidate(v=K @ p.u / p.lam, lam=p.lam, source=p))
    return out


def recover_W(selection_or_vectors) -> np.ndarray:
    """Pseudo-inverse of the ``m x d`` matrix of chosen candidate vectors."""
    if isinstance(selection_or_vectors, Selection):
        V = np.column_stack([c.v for c in selection_or_vectors.chosen])
    elif isinstance(selection_or_vectors, (list, tuple)) and selection_or_vectors and isinstance(selection_or_vectors[0], Candidate):
        V = np.column_stack([c.v for c in selection_or_vectors])
    else:
        V = np.asarray(selection_or_vectors, dtype=float)
    if V.ndim != 2 or V.shape[1] > V.shape[0]:
        raise DimensionError(f"expected an m x d matrix with m >= d, got {V.shape}")
    sv = np.linalg.svd(V, compute_uv=False)
    if sv[-1] <= 1e-10 * max(sv[0], 1.0):
        raise RankError(f"selected vectors are linearly dependent (smallest singular value {sv[-1]:.3e})")
    return np.linalg.pinv(V)


def _selection(chosen):
    return Selection(chosen=list(chosen), W_hat=recover_W(list(chosen)))


def filter_exact(cands, X, eps_bin=None, d=None) -> Selection:
    """Keep candidates whose projections of the data are all 0 or 1."""
    X = np.asarray(X, dtype=float)
    if eps_bin is None:
        eps_bin = 1e-6 * float(np.linalg.norm(X, axis=0).max())
    keep = []
    for c in cands:
        p = c.v @ X
        r = np.round(p)
        if np.all((r == 0) | (r == 1)) and np.max(np.abs(p - r)) <= eps_bin:
            keep.append(c)
    if d is not None and len(keep) != d:
        raise SurvivorCountError(
            f"{len(keep)} candidates satisfy the binary constraints, expected {d}; "
            "the hidden matrix is not rigid or the data is noisy")
    if not keep:
        raise SurvivorCountError("no candidate satisfies the binary constraints")
    return _selection(keep)


def gmm2_cdf(t, params: Gmm2Params):
    if params.var <= 0:
        raise DataError("two-component mixture needs a positive variance")
    s = np.sqrt(params.var)
    t = np.asarray(t, dtype=float)
    return (1.0 - params.weight1) * ndtr(t / s) + params.weight1 * ndtr((t - 1.0) / s)


def ks_score(cand: Candidate, X2, sigma: float) -> float:
    """Exact ``sup_t |F_n(t) - G(t)|`` for the projections ``v^T x`` of the hold-out.

    Both sides of every empirical jump are compared, so no grid is involved.
    """
    X2 = np.asarray(X2, dtype=float)
    if X2.ndim != 2 or X2.shape[1] == 0:
        raise DataError("empty hold-out sample")
    if sigma <= 0:
        raise DataError("KS scoring requires sigma > 0")
    y = np.sort(cand.v @ X2)
    n = y.size
    G = gmm2_cdf(y, Gmm2Params.for_candidate(cand, sigma))
    upper = np.arange(1, n + 1) / n - G
    lower = G - np.arange(0, n) / n
    return float(max(upper.max(), lower.max(), 0.0))


def rounding_score(v, X) -> float:
    """Mean squared distance of ``v^T x`` to {0, 1}, normalized by ``|v|^2``.

    Diagnostic only: reliable at small noise, not used for selection.
    """
    v = np.asarray(v, dtype=float)
    p = v @ np.asarray(X, dtype=float)
    dev = np.minimum(p**2, (p - 1.0) ** 2)
    return float(dev.mean() / (v @ v))


def _tie_key(c):
    return (c.score, -c.lam, tuple(c.v))


def select_by_score(cands, d: int) -> Selection:
    """The ``d`` lowest-score candidates (ties: larger eigenvalue, then lexicographic ``v``)."""
    if len(cands) < d:
        raise SurvivorCountError(f"only {len(cands)} candidates for d={d}; eigenpair enumeration likely failed")
    chosen = sorted(cands, key=_tie_key)[:d]
    return _selection(chosen)


def aligned_error(W_hat, W_true):
    """Frobenius error after the best row permutation.

    Returns ``(error, perm, row_errors)`` where row ``perm[i]`` of ``W_hat``
    is matched to row ``i`` of ``W_true``.
    """
    A = np.asarray(W_hat, dtype=float)
    B = np.asarray(W_true, dtype=float)
    if A.shape != B.shape:
        raise DimensionError(f"shape mismatch {A.shape} vs {B.shape}")
    cost = ((B[:, None, :] - A[None, :, :]) ** 2).sum(axis=2)
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(B.shape[0], dtype=int)
    perm[rows] = cols
    row_err = np.sqrt(cost[np.arange(B.shape[0]), perm])
    return float(np.sqrt(np.sum(row_err**2))), perm, row_err


def algorithm1(X, solver: SolverConfig | None = None, eps_bin=None, lambda_slack: float = 1e-9) -> ModelEstimate:
    """Exact recovery of ``W`` from noiseless samples.

    ``lambda_slack`` only absorbs rounding in the eigenvalue of units with
    ``P(h_i = 1) = 1`` (exact eigenvalue one).
    """
    X = np.asarray(X, dtype=float)
    moms = empirical_moments(X)
    d = numerical_rank(moms.M)
    K = whiten(moms.M, d)
    Tw = whitened_tensor(moms.T, K)
    pairs = enumerate_eigenpairs(Tw, solver or SolverConfig())
    cands = build_candidates(pairs, K, lambda_slack)
    sel = filter_exact(cands, X, eps_bin=eps_bin, d=d)
    info = {"method": "spectral", "d": d, "sigma2": 0.0, "n": X.shape[1]}
    return ModelEstimate(W_hat=sel.W_hat, selection=sel, candidates=cands, eigenpairs=pairs, K=K, info=info)


def algorithm2(X, d=None, sigma=None, lambda_thresh=None, solver: SolverConfig | None = None) -> ModelEstimate:
    """Consistent estimate of ``W`` for ``sigma > 0`` from ``2n`` samples.

    The first half of the columns feeds the moments and eigenpairs, the second
    half the KS filtering.  ``d`` and ``sigma`` are estimated from the first
    half when not given.
    """
    X = np.asarray(X, dtype=float)
    X1, X2 = split_sample(X)
    moms = empirical_moments(X1)
    if d is None or sigma is None:
        d_est, s2_est = estimate_d_sigma(moms.M)
        d = d_est if d is None else d
        sigma = np.sqrt(s2_est) if sigma is None else sigma
    if sigma <= 0:
        raise DataError("algorithm2 needs sigma > 0; use algorithm1 for noiseless data")
    if lambda_thresh is None:
        lambda_thresh = default_lambda_thresh(X1.shape[1])
    cm = noise_correct(moms, sigma**2)
    K = whiten(cm.M_sigma, d)
    Tw = whitened_tensor(cm.T_sigma, K)
    pairs = enumerate_eigenpairs(Tw, solver or SolverConfig())
    cands = build_candidates(pairs, K, lambda_thresh)
    scored = [c.with_score(ks_score(c, X2, sigma)) for c in cands]
    sel = select_by_score(scored, d)
    info = {
        "method": "spectral",
        "d": int(d),
        "sigma2": float(sigma**2),
        "lambda_thresh": float(lambda_thresh),
        "n_moment": X1.shape[1],
        "n_holdout": X2.shape[1],
        "newton_stable_count": sum(p.stability.newton_stable for p in pairs),
    }
    return ModelEstimate(W_hat=sel.W_hat, selection=sel, candidates=scored, eigenpairs=pairs, K=K, info=info)


def _h_table(d):
    if d > 20:
        raise DataError(f"2^d enumeration is capped at d <= 20, got d={d}")
    return full_support(d)


def wls_refine(X, W_hat, sigma: float, K_top: int = 6, block: int = 8192) -> np.ndarray:
    """One weighted least-squares step over the most likely binary codes of each sample."""
    X = np.asarray(X, dtype=float)
    W_hat = np.asarray(W_hat, dtype=float)
    d = W_hat.shape[0]
    if sigma <= 0:
        raise DataError("wls_refine needs sigma > 0")
    Hs = _h_table(d)  # (2^d, d)
    k = min(K_top, Hs.shape[0])
    means = Hs @ W_hat  # (2^d, m)
    A = np.zeros((d, d))
    B = np.zeros((d, X.shape[0]))
    for s in range(0, X.shape[1], block):
        Xb = X[:, s:s + block]
        # squared distances of each sample to each code's mean
        dist = (Xb**2).sum(axis=0)[None, :] - 2.0 * means @ Xb + (means**2).sum(axis=1)[:, None]
        loglik = -dist / (2.0 * sigma**2)
        if k < Hs.shape[0]:
            top = np.argpartition(-loglik, k - 1, axis=0)[:k]
        else:
            top = np.broadcast_to(np.arange(Hs.shape[0])[:, None], loglik.shape)
        ll = np.take_along_axis(loglik, top, axis=0)  # (k, nb)
        Pi = np.exp(ll - logsumexp(ll, axis=0, keepdims=True))
        # A = sum Pi h h^T, B = sum Pi h x^T
        Hk = Hs[top]  # (k, nb, d)
        A += np.einsum("kn,kni,knj->ij", Pi, Hk, Hk)
        B += np.einsum("kn,kni,mn->im", Pi, Hk, Xb)
    # a unit that is never active among the kept codes leaves A singular
    return np.linalg.lstsq(A, B, rcond=None)[0]


def _residual_sigma(X, V):
    Q, _ = np.linalg.qr(V)
    R = X - Q @ (Q.T @ X)
    dof = max(X.shape[0] - V.shape[1], 1)
    return float(np.sqrt((R**2).sum() / (X.shape[1] * dof)))


def _subset_loglik(C, G, sigma, n_em=25):
    """Mixture log-likelihood of the coefficients ``C`` (d x n) over binary codes.

    ``G = B^T B`` is the Gram matrix of the mean directions.  The weights of the
    ``2^d`` codes are fitted by EM with the means held fixed.
    """
    d = C.shape[0]
    Hs = full_support(d)
    D = C[None, :, :] - Hs[:, :, None]  # (2^d, d, n)
    q = np.einsum("kin,ij,kjn->kn", D, G, D)
    base = -q / (2.0 * sigma**2)
    logw = np.full((Hs.shape[0], 1), -np.log(Hs.shape[0]))
    for _ in range(n_em):
        post = base + logw
        post -= logsumexp(post, axis=0, keepdims=True)
        logw = np.log(np.maximum(np.exp(post).mean(axis=1, keepdims=True), 1e-300))
    return float(logsumexp(base + logw, axis=0).sum())


def likelihood_select(cands, X, d: int, sigma=None, max_candidates: int = 30, max_samples: int = 20000) -> Selection:
    """Exhaustive search for the size-``d`` subset with the largest data likelihood.

    Each subset defines ``W_hat`` (pseudo-inverse) and hence a Gaussian mixture
    over the ``2^d`` binary codes with means ``W_hat^T h`` and a shared variance.
    The component outside the common span is identical for all subsets, so only
    the in-span part is evaluated.  Rank-deficient subsets are skipped.
    """
    if len(cands) > max_candidates:
        raise DataError(f"{len(cands)} candidates exceed the exhaustive-search guard of {max_candidates}")
    if len(cands) < d:
        raise SurvivorCountError(f"only {len(cands)} candidates for d={d}")
    X = np.asarray(X, dtype=float)[:, :max_samples]
    Vall = np.column_stack([c.v for c in cands])
    if sigma is None:
        sigma = _residual_sigma(X, _span_basis(Vall, d))
    best, best_ll = None, -np.inf
    for subset in combinations(range(len(cands)), d):
        V = Vall[:, subset]
        sv = np.linalg.svd(V, compute_uv=False)
        if sv[-1] <= 1e-8 * max(sv[0], 1.0):
            continue
        Wh = np.linalg.pinv(V)  # d x m; means are Wh^T h
        B = Wh.T
        C = np.linalg.lstsq(B, X, rcond=None)[0]
        ll = _subset_loglik(C, B.T @ B, sigma)
        if ll > best_ll:
            best, best_ll = subset, ll
    if best is None:
        raise RankError("every candidate subset is rank deficient")
    return _selection([cands[i] for i in best])


def admixture_estimate(X, d: int, denoise: bool = True, solver: SolverConfig | None = None,
                       lambda_thresh: float = 1.0, max_samples: int = 20000) -> ModelEstimate:
    """Spectral estimate for observations with ``E[x | h] = W^T h`` but non-Gaussian noise.

    With ``denoise`` the diagonal of the second moment is completed from its
    off-diagonal part and the whitened tensor is fit to the third-moment
    entries with distinct indices; otherwise the raw moments are used as if
    the data were noiseless.  The candidate subset is chosen by likelihood.
    ``lambda_thresh = 1`` keeps every candidate with a positive eigenvalue,
    since the eigenvalue identity of the binary model need not hold here.
    """
    from .denoise import complete_diagonal, fit_whitened_tensor_masked

    X = np.asarray(X, dtype=float)
    moms = empirical_moments(X)
    if denoise:
        K = whiten(complete_diagonal(moms.M, d), d)
        Tw = fit_whitened_tensor_masked(moms.T, K)
    else:
        K = whiten(moms.M, d)
        Tw = whitened_tensor(moms.T, K)
    pairs = enumerate_eigenpairs(Tw, solver or SolverConfig())
    cands = [c for c in build_candidates(pairs, K, lambda_thresh) if c.lam > 0]
    sel = likelihood_select(cands, X, d, max_samples=max_samples)
    info = {"method": "spectral-denoised" if denoise else "spectral-raw", "d": int(d), "n": X.shape[1]}
    return ModelEstimate(W_hat=sel.W_hat, selection=sel, candidates=cands, eigenpairs=pairs, K=K, info=info)


def _span_basis(V, d):
    U, _, _ = np.linalg.svd(V, full_matrices=False)
    return U[:, :d]


# ---------------------------------------------------------------------------
# diagnostics


def expected_rounding(u, atoms, probs) -> float:
    """``E[min_b (u^T h - b)^2]`` over ``b`` in {0, 1}."""
    p = np.asarray(atoms, dtype=float) @ np.asarray(u, dtype=float)
    return float(np.asarray(probs) @ np.minimum(p**2, (p - 1.0) ** 2))


@dataclass
class ConditionReport:
    sigma_rank: int
    sigma_full_rank: bool
    condition_ii_ranks: list
    condition_ii: bool
    power_definiteness: list
    power_condition: bool
    rounding_at_units: list
    rounding_probe_min: float | None
    expected_rigidity: bool | None
    d: int = 0

    def as_dict(self) -> dict:
        return {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in self.__dict__.items()}


def _definiteness(A, tol=1e-10):
    ev = np.linalg.eigvalsh(0.5 * (A + A.T))
    if ev.size == 0:
        return "negative"
    scale = max(abs(ev).max(), 1.0)
    if ev.max() < -tol * scale:
        return "negative"
    if ev.min() > tol * scale:
        return "positive"
    return "indefinite"


def check_conditions(lm: LatentMoments, n_probe: int = 2000, seed=0) -> ConditionReport:
    """Non-degeneracy diagnostics for a hidden-unit distribution.

    The whitened frame is built from ``Sigma^(1/2)``; definiteness of the
    power-stability matrices does not depend on ``W`` or on the choice of
    whitening, so ``W = I`` is used.
    """
    d = lm.d
    Sigma = 0.5 * (lm.Sigma + lm.Sigma.T)
    rank = int(np.linalg.matrix_rank(Sigma, tol=1e-10 * max(1.0, abs(Sigma).max())))
    full = rank == d
    ranks = []
    for i in range(d):
        Ai = 2.0 * lm.Omega.data[:, :, i] - Sigma
        ranks.append(int(np.linalg.matrix_rank(Ai, tol=1e-10 * max(1.0, abs(Ai).max()))))
    cond_ii = all(r == d for r in ranks)
    definite = []
    if full:
        ev, V = np.linalg.eigh(Sigma)
        A = V @ np.diag(ev**-0.5) @ V.T  # A^T Sigma A = I
        root = V @ np.diag(ev**0.5) @ V.T
        for i in range(d):
            u = root[:, i] / np.linalg.norm(root[:, i])  # A u is proportional to e_i
            P = tangent_basis(u)
            Mi = (A @ P).T @ (2.0 * lm.Omega.data[:, :, i] - Sigma) @ (A @ P)
            definite.append(_definiteness(Mi))
    power = full and all(x != "indefinite" for x in definite)
    at_units, probe_min, rigid = [], None, None
    if lm.atoms is not None:
        at_units = [expected_rounding(np.eye(d)[i], lm.atoms, lm.probs) for i in range(d)]
        rng = np.random.default_rng(seed)
        U = rng.standard_normal((n_probe, d)) * rng.uniform(0.2, 2.0, size=(n_probe, 1))
        probe = [expected_rounding(u, lm.atoms, lm.probs) for u in U]
        probe_min = float(min(probe))
        rigid = all(abs(r) < 1e-15 for r in at_units) and probe_min > 0
    return ConditionReport(
        sigma_rank=rank, sigma_full_rank=full, condition_ii_ranks=ranks, condition_ii=cond_ii,
        power_definiteness=definite, power_condition=power, rounding_at_units=at_units,
        rounding_probe_min=probe_min, expected_rigidity=rigid, d=d)
