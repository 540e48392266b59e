"""Empirical and population moments, noise correction and whitening.

Samples are stored column-wise: ``X`` has shape ``(m, n)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .errors import DataError, DimensionError, RankError
from .tensor import SymTensor3, multilinear

__all__ = [
    "MomentSet",
    "CorrectedMoments",
    "WhitenedModel",
    "LatentMoments",
    "empirical_moments",
    "noise_correct",
    "whiten",
    "whitened_tensor",
    "whiten_moments",
    "estimate_d_sigma",
    "latent_population_moments",
    "observed_population_moments",
    "split_sample",
    "numerical_rank",
]

BLOCK = 16384


@dataclass(frozen=True, eq=False)
class MomentSet:
    mu: np.ndarray
    M: np.ndarray
    T: SymTensor3
    n: int


@dataclass(frozen=True, eq=False)
class CorrectedMoments:
    M_sigma: np.ndarray
    T_sigma: SymTensor3
    sigma2: float
    mu: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class WhitenedModel:
    K: np.ndarray
    T_white: SymTensor3
    eigenvalues: np.ndarray | None = None

    @property
    def d(self) -> int:
        return self.K.shape[1]


@dataclass(frozen=True, eq=False)
class LatentMoments:
    """First three moments of the binary hidden vector.

    ``atoms``/``probs`` keep the distribution the moments came from (when
    known), which the condition checks need for rigidity probes.
    """

    phi: np.ndarray
    Sigma: np.ndarray
    Omega: SymTensor3
    atoms: np.ndarray | None = field(default=None, repr=False)
    probs: np.ndarray | None = field(default=None, repr=False)

    @property
    def d(self) -> int:
        return self.phi.size


def _as_samples(X):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise DimensionError(f"sample matrix must be 2-D, got shape {X.shape}")
    if X.shape[1] < 1:
        raise DataError("empty sample")
    return X


def empirical_moments(X) -> MomentSet:
    """Sample mean, second moment and third moment tensor of the columns of ``X``.

    The third moment is accumulated slice by slice, ``T[i] = (X * x_i) X^T``,
    in blocks of samples; the cost is ``O(n m^3)``.
    """
    X = _as_samples(X)
    m, n = X.shape
    mu = X.sum(axis=1)
    M = np.zeros((m, m))
    T = np.zeros((m, m, m))
    for s in range(0, n, BLOCK):
        B = X[:, s:s + BLOCK]
        M += B @ B.T
        for i in range(m):
            T[i] += (B * B[i]) @ B.T
    return MomentSet(mu=mu / n, M=0.5 * (M + M.T) / n, T=SymTensor3(T / n), n=n)


def _noise_tensor(mu):
    m = mu.size
    E = np.zeros((m, m, m))
    idx = np.arange(m)
    # sum_i mu (x) e_i (x) e_i + e_i (x) mu (x) e_i + e_i (x) e_i (x) mu
    E[:, idx, idx] += mu[:, None]
    E[idx, :, idx] += mu[None, :]
    E[idx, idx, :] += mu[None, :]
    return E


def noise_correct(moms: MomentSet, sigma2: float) -> CorrectedMoments:
    """Remove the isotropic Gaussian noise contribution from the raw moments."""
    if sigma2 < 0:
        raise DataError("sigma2 must be non-negative")
    m = moms.mu.size
    if sigma2 == 0:
        return CorrectedMoments(M_sigma=moms.M.copy(), T_sigma=moms.T, sigma2=0.0, mu=moms.mu)
    M_sigma = moms.M - sigma2 * np.eye(m)
    T_sigma = SymTensor3(moms.T.data - sigma2 * _noise_tensor(moms.mu))
    return CorrectedMoments(M_sigma=M_sigma, T_sigma=T_sigma, sigma2=float(sigma2), mu=moms.mu)


def numerical_rank(M, rtol=1e-10) -> int:
    ev = np.linalg.eigvalsh(0.5 * (M + M.T))
    top = max(abs(ev).max(), np.finfo(float).tiny)
    return int(np.sum(ev > rtol * top))


def whiten(M_sigma, d: int, rtol: float = 1e-10) -> np.ndarray:
    """``K = V_d diag(ev_d)^(-1/2)`` from the top-``d`` eigenpairs, so ``K^T M K = I_d``."""
    M_sigma = np.asarray(M_sigma, dtype=float)
    if M_sigma.ndim != 2 or M_sigma.shape[0] != M_sigma.shape[1]:
        raise DimensionError("whitening needs a square matrix")
    m = M_sigma.shape[0]
    if not 1 <= d <= m:
        raise DimensionError(f"latent dimension {d} outside [1, {m}]")
    ev, V = np.linalg.eigh(0.5 * (M_sigma + M_sigma.T))
    ev, V = ev[::-1], V[:, ::-1]
    floor = rtol * max(abs(ev[0]), np.finfo(float).tiny)
    if ev[d - 1] <= floor:
        gap = ev[d - 2] if d >= 2 else ev[0]
        raise RankError(
            f"second moment has effective rank < {d}: eigenvalue #{d} is {ev[d - 1]:.3e} "
            f"(previous {gap:.3e})")
    return V[:, :d] / np.sqrt(ev[:d])


def whitened_tensor(T_sigma: SymTensor3, K) -> SymTensor3:
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != T_sigma.dim:
        raise DimensionError(f"whitening matrix of shape {K.shape} does not match tensor dim {T_sigma.dim}")
    return multilinear(T_sigma, K, K, K)


def whiten_moments(cm: CorrectedMoments, d: int) -> WhitenedModel:
    K = whiten(cm.M_sigma, d)
    ev = np.linalg.eigvalsh(cm.M_sigma)[::-1]
    return WhitenedModel(K=K, T_white=whitened_tensor(cm.T_sigma, K), eigenvalues=ev)


def estimate_d_sigma(M_hat, min_trailing: int = 2, floor: float = 1e-10):
    """Estimate the latent dimension and the noise variance from the second moment.

    The spectrum ``ev_1 >= ... >= ev_m`` is split where the gap ``ev_k - ev_{k+1}``
    is largest relative to the spread ``ev_{k+1} - ev_m`` of the eigenvalues left
    below it; the trailing ``m - d`` eigenvalues are then noise and their mean is
    ``sigma^2``.  On an exact ``W^T Sigma W + sigma^2 I`` the trailing spread
    vanishes and both estimates are exact.
    """
    M_hat = np.asarray(M_hat, dtype=float)
    m = M_hat.shape[0]
    if m < 2 or M_hat.shape != (m, m):
        raise DimensionError("need a square matrix with m >= 2")
    ev = np.linalg.eigvalsh(0.5 * (M_hat + M_hat.T))[::-1]
    scale = max(abs(ev[0]), np.finfo(float).tiny)
    if ev[0] - ev[-1] <= floor * scale:
        raise DataError("degenerate spectrum: all eigenvalues equal, d cannot be determined")
    kmax = m - min_trailing if m > min_trailing else m - 1
    scores = []
    for k in range(1, kmax + 1):
        gap = ev[k - 1] - ev[k]
        spread = ev[k] - ev[-1]
        scores.append(gap / (spread + floor * scale))
    d = int(np.argmax(scores)) + 1
    sigma2 = float(max(np.mean(ev[d:]), 0.0))
    if sigma2 <= floor * scale:
        sigma2 = 0.0
    return d, sigma2


def _validate_distribution(atoms, probs):
    atoms = np.asarray(atoms, dtype=float)
    probs = np.asarray(probs, dtype=float)
    if atoms.ndim != 2 or atoms.shape[0] != probs.size:
        raise DimensionError("atoms must be (k, d) with one probability per atom")
    if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-9:
        raise DataError("probabilities must be non-negative and sum to one")
    if not np.all((atoms == 0) | (atoms == 1)):
        raise DataError("atoms must be binary vectors")
    return atoms, probs


def latent_population_moments(atoms, probs) -> LatentMoments:
    """Exact ``E[h]``, ``E[h h]`` and ``E[h h h]`` of a distribution given by its atoms."""
    atoms, probs = _validate_distribution(atoms, probs)
    phi = probs @ atoms
    Sigma = np.einsum("a,ai,aj->ij", probs, atoms, atoms)
    Omega = SymTensor3(np.einsum("a,ai,aj,ak->ijk", probs, atoms, atoms, atoms))
    return LatentMoments(phi=phi, Sigma=Sigma, Omega=Omega, atoms=atoms, probs=probs)


def full_support(d):
    """All ``2^d`` binary vectors, in lexicographic order."""
    return np.array(list(product((0, 1), repeat=d)), dtype=float)


def observed_population_moments(W, lm: LatentMoments, sigma2: float = 0.0):
    """Population ``(mu, M, T)`` of ``x = W^T h + sigma eps`` (Gaussian noise)."""
    W = np.asarray(W, dtype=float)
    mu = W.T @ lm.phi
    M = W.T @ lm.Sigma @ W
    T = multilinear(lm.Omega, W, W, W)
    moms = MomentSet(mu=mu, M=M, T=T, n=0)
    if sigma2 == 0:
        return moms
    m = mu.size
    return MomentSet(mu=mu, M=M + sigma2 * np.eye(m),
                     T=SymTensor3(T.data + sigma2 * _noise_tensor(mu)), n=0)


def split_sample(X):
    """First ``floor(n/2)`` columns for moments, the rest held out."""
    X = _as_samples(X)
    h = X.shape[1] // 2
    if h < 1:
        raise DataError("need at least two samples to split")
    return X[:, :h], X[:, h:]
