"""Moment repair for observation noise that is not isotropic Gaussian.

When only ``E[x | h] = W^T h`` is known, the diagonal of the second moment and
every third-moment entry with a repeated index carry an unknown noise bias.
The routines here discard those entries: the diagonal of ``M`` is filled in
from a rank-``d`` fit of the off-diagonal part, and the whitened tensor is fit
by least squares to the entries ``T[i, j, k]`` with pairwise distinct indices.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, combinations_with_replacement, permutations

import numpy as np

from .errors import ConvergenceError, DataError, DimensionError, RankError
from .tensor import SymTensor3

__all__ = [
    "MaskedTensorSystem",
    "complete_diagonal",
    "distinct_triples",
    "mask_offdiag",
    "masked_system",
    "fit_whitened_tensor_masked",
]


def complete_diagonal(M, d: int, max_iter: int = 10000, tol: float = 1e-13, return_info: bool = False):
    """Fill in the diagonal of ``M`` so that the result is close to rank ``d``.

    Starting from ``M`` itself, repeat: take the ``d`` leading eigenpairs of the
    current matrix and overwrite its diagonal with the diagonal of their
    rank-``d`` reconstruction.  Off-diagonal entries are never touched.

    Parameters
    ----------
    M : (m, m) array
        Symmetric matrix whose diagonal is unreliable.
    d : int
        Target rank, ``1 <= d < m``.
    max_iter, tol
        Stop once the largest change of a diagonal entry falls below
        ``tol * max(1, max|M|)``.

    Returns
    -------
    R : (m, m) array
        ``M`` with a repaired diagonal; with ``return_info`` also
        ``(iterations, final_delta)``.

    Raises
    ------
    ConvergenceError
        If ``max_iter`` is reached; the message carries the final change.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError("complete_diagonal needs a square matrix")
    m = M.shape[0]
    if not 1 <= d < m:
        raise DimensionError(f"need 1 <= d < m, got d={d}, m={m}")
    if not np.allclose(M, M.T, rtol=1e-10, atol=1e-12):
        raise DataError("complete_diagonal needs a symmetric matrix")
    R = M.copy()
    idx = np.arange(m)
    thresh = tol * max(1.0, float(np.abs(R).max()))
    delta = np.inf
    for it in range(1, max_iter + 1):
        ev, V = np.linalg.eigh(R)
        top = V[:, -d:]
        new_diag = np.einsum("ik,k,ik->i", top, ev[-d:], top)
        delta = float(np.abs(new_diag - R[idx, idx]).max())
        R[idx, idx] = new_diag
        if delta < thresh:
            return (R, it, delta) if return_info else R
    raise ConvergenceError(f"diagonal completion did not converge in {max_iter} iterations "
                           f"(last change {delta:.3e})")


def _offdiag_mask(m):
    i, j, k = np.ogrid[:m, :m, :m]
    return (i != j) & (j != k) & (i != k)


def mask_offdiag(T):
    """Zero every entry of a third-order tensor whose indices are not pairwise distinct."""
    data = T.data if isinstance(T, SymTensor3) else np.asarray(T, dtype=float)
    out = np.where(_offdiag_mask(data.shape[0]), data, 0.0)
    return SymTensor3(out) if isinstance(T, SymTensor3) else out


def distinct_triples(m: int) -> np.ndarray:
    """Index triples ``i < j < k``; one per orbit of pairwise-distinct entries."""
    return np.array(list(combinations(range(m), 3)), dtype=int).reshape(-1, 3)


@dataclass(frozen=True, eq=False)
class MaskedTensorSystem:
    """Linear map from the free entries of a symmetric ``d x d x d`` tensor to
    the pairwise-distinct entries of its image under ``K^+``.

    ``unknowns`` lists the index triples ``a <= b <= c``; ``triples`` the
    observed ``i < j < k``.  Each observed entry stands for its six
    permutations, so every design row is scaled by ``sqrt(6)`` to make the
    least-squares objective equal to the masked Frobenius norm.
    """

    K_pinv: np.ndarray
    unknowns: np.ndarray
    triples: np.ndarray
    design: np.ndarray

    @property
    def n_equations(self) -> int:
        return len(self.triples)

    @property
    def n_unknowns(self) -> int:
        return len(self.unknowns)

    def singular_values(self) -> np.ndarray:
        return np.linalg.svd(self.design, compute_uv=False)

    def rhs(self, T) -> np.ndarray:
        data = T.data if isinstance(T, SymTensor3) else np.asarray(T, dtype=float)
        i, j, k = self.triples.T
        return np.sqrt(6.0) * data[i, j, k]

    def to_tensor(self, theta) -> SymTensor3:
        d = self.K_pinv.shape[0]
        out = np.zeros((d, d, d))
        for val, (a, b, c) in zip(theta, self.unknowns):
            for p in set(permutations((a, b, c))):
                out[p] = val
        return SymTensor3(out)


def masked_system(K) -> MaskedTensorSystem:
    """Assemble the design for whitening matrix ``K`` (shape ``m x d``)."""
    K = np.asarray(K, dtype=float)
    if K.ndim != 2:
        raise DimensionError("K must be a 2-D array")
    P = np.linalg.pinv(K)
    d, m = P.shape
    unknowns = np.array(list(combinations_with_replacement(range(d), 3)), dtype=int)
    triples = distinct_triples(m)
    if len(triples) == 0:
        raise DimensionError(f"no pairwise-distinct index triples for m={m}")
    i, j, k = triples.T
    cols = []
    for a, b, c in unknowns:
        col = np.zeros(len(triples))
        for p, q, r in set(permutations((a, b, c))):
            col += P[p, i] * P[q, j] * P[r, k]
        cols.append(col)
    design = np.sqrt(6.0) * np.column_stack(cols)
    return MaskedTensorSystem(K_pinv=P, unknowns=unknowns, triples=triples, design=design)


def fit_whitened_tensor_masked(T_hat, K, system: MaskedTensorSystem | None = None,
                               rtol: float = 1e-10) -> SymTensor3:
    """Least-squares whitened tensor from the pairwise-distinct entries of ``T_hat``.

    Minimizes ``|P(S(K^+, K^+, K^+)) - P(T_hat)|_F`` over symmetric ``S``, where
    ``P`` keeps the entries with pairwise distinct indices.

    Raises
    ------
    RankError
        When the design has rank below the number of unknowns; the message
        gives the rank and the smallest singular value.
    """
    data = T_hat.data if isinstance(T_hat, SymTensor3) else np.asarray(T_hat, dtype=float)
    K = np.asarray(K, dtype=float)
    if data.shape != (K.shape[0],) * 3:
        raise DimensionError(f"tensor of shape {data.shape} does not match K of shape {K.shape}")
    sysm = masked_system(K) if system is None else system
    sv = sysm.singular_values()
    floor = rtol * max(sv.max(initial=0.0), np.finfo(float).tiny)
    rank = int(np.sum(sv > floor))
    if rank < sysm.n_unknowns:
        smallest = sv.min() if len(sv) == sysm.n_unknowns else 0.0
        raise RankError(f"masked design has rank {rank} < {sysm.n_unknowns} unknowns "
                        f"(smallest singular value {smallest:.3e})")
    theta = np.linalg.lstsq(sysm.design, sysm.rhs(data), rcond=None)[0]
    return sysm.to_tensor(theta)
