"""Dense symmetric third order tensors and their Z-eigenpair calculus.

A tensor ``T`` acts as a multilinear form; ``T(I, u, u)`` is the vector with
entries ``sum_kl T[j, k, l] u[k] u[l]``.  Eigenpairs ``(u, lam)`` satisfy
``T(I, u, u) = lam * u`` with ``|u| = 1`` and are stored with ``lam >= 0``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from itertools import permutations

import numpy as np

from .errors import DataError, DimensionError

__all__ = [
    "SymTensor3",
    "Stability",
    "Eigenpair",
    "symmetrize",
    "rank_one",
    "diagonal",
    "random_symmetric",
    "mode_apply",
    "multilinear",
    "residual_g",
    "jacobian_g",
    "tangent_basis",
    "projected_jacobian",
    "classify",
    "canonical_sign",
]

UNIT_TOL = 1e-8


def _sorted_index_grid(d):
    i, j, k = np.indices((d, d, d))
    s = np.sort(np.stack([i, j, k]), axis=0)
    return s[0], s[1], s[2]


def symmetrize(a):
    """Return the exactly symmetric average of ``a`` over all index permutations.

    Every permutation of an index triple reads the same stored value, so the
    result is symmetric bit for bit, not just up to rounding.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 3 or not (a.shape[0] == a.shape[1] == a.shape[2]):
        raise DimensionError(f"expected a cubic order-3 array, got shape {a.shape}")
    if _is_exactly_symmetric(a):
        return a.copy()
    avg = sum(np.transpose(a, p) for p in permutations(range(3))) / 6.0
    s0, s1, s2 = _sorted_index_grid(a.shape[0])
    return avg[s0, s1, s2]


def _is_exactly_symmetric(a):
    return all(np.array_equal(a, np.transpose(a, p)) for p in permutations(range(3)))


@dataclass(frozen=True, eq=False)
class SymTensor3:
    """Symmetric ``d x d x d`` tensor.  Construction symmetrizes the data."""

    data: np.ndarray

    def __post_init__(self):
        arr = symmetrize(self.data)
        if not np.all(np.isfinite(arr)):
            raise DataError("tensor entries must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def __call__(self, a, b, c):
        return multilinear(self, a, b, c)

    def __sub__(self, other):
        return SymTensor3(self.data - _as_array(other))

    def __add__(self, other):
        return SymTensor3(self.data + _as_array(other))

    def __mul__(self, scalar):
        return SymTensor3(self.data * float(scalar))

    __rmul__ = __mul__

    def frobenius(self) -> float:
        return float(np.linalg.norm(self.data.ravel()))


def _as_array(t):
    return t.data if isinstance(t, SymTensor3) else np.asarray(t, dtype=float)


def rank_one(v, weight=1.0) -> SymTensor3:
    v = np.asarray(v, dtype=float)
    return SymTensor3(weight * np.einsum("i,j,k->ijk", v, v, v))


def diagonal(a) -> SymTensor3:
    a = np.asarray(a, dtype=float)
    d = a.size
    t = np.zeros((d, d, d))
    t[np.arange(d), np.arange(d), np.arange(d)] = a
    return SymTensor3(t)


def random_symmetric(d, rng=None) -> SymTensor3:
    """Symmetrized standard Gaussian tensor (a generic tensor with probability one)."""
    rng = np.random.default_rng(rng)
    return SymTensor3(rng.standard_normal((d, d, d)))


def _check_vec(T, u):
    u = np.asarray(u, dtype=float)
    if u.shape != (T.dim,):
        raise DimensionError(f"vector of shape {u.shape} does not match tensor dim {T.dim}")
    return u


def _check_unit(u):
    if abs(np.linalg.norm(u) - 1.0) > UNIT_TOL:
        raise DataError(f"expected a unit vector, got norm {np.linalg.norm(u)!r}")


def mode_apply(T: SymTensor3, u) -> np.ndarray:
    """``T(I, u, u)``."""
    u = _check_vec(T, u)
    return T.data.reshape(T.dim, -1) @ np.outer(u, u).ravel()


def multilinear(T: SymTensor3, A, B, C):
    """Tensor-mode product ``T(A, B, C)``.

    ``A, B, C`` have ``T.dim`` rows (vectors are treated as single columns).
    Returns a :class:`SymTensor3` when the three factors are the same matrix,
    a plain array otherwise.
    """
    mats = []
    for M in (A, B, C):
        M = np.asarray(M, dtype=float)
        if M.ndim == 1:
            M = M[:, None]
        if M.ndim != 2 or M.shape[0] != T.dim:
            raise DimensionError(f"factor of shape {M.shape} does not match tensor dim {T.dim}")
        mats.append(M)
    A, B, C = mats
    out = np.einsum("abc,ai,bj,ck->ijk", T.data, A, B, C, optimize=True)
    if A is B is C or (A.shape == B.shape == C.shape and np.array_equal(A, B) and np.array_equal(A, C)):
        return SymTensor3(out)
    return out


def residual_g(T: SymTensor3, u) -> np.ndarray:
    """``g(u) = T(I,u,u) - T(u,u,u) u``; vanishes exactly at eigenvectors."""
    u = _check_vec(T, u)
    _check_unit(u)
    w = mode_apply(T, u)
    return w - (w @ u) * u


def jacobian_g(T: SymTensor3, u) -> np.ndarray:
    """Full ``d x d`` Jacobian of ``g`` at ``u``."""
    u = _check_vec(T, u)
    Tu = T.data @ u  # T(I, I, u)
    w = Tu @ u
    return 2.0 * Tu - 3.0 * np.outer(u, w) - (w @ u) * np.eye(T.dim)


def tangent_basis(u) -> np.ndarray:
    """Orthonormal basis of the complement of ``u`` (``d x (d-1)``).

    Columns 2..d of the Householder reflector that exchanges ``e_1`` and
    ``+-u``; the sign is chosen to avoid cancellation.
    """
    u = np.asarray(u, dtype=float)
    d = u.size
    w = u.copy()
    w[0] += 1.0 if u[0] >= 0 else -1.0
    H = np.eye(d) - 2.0 * np.outer(w, w) / (w @ w)
    return H[:, 1:]


def projected_jacobian(T: SymTensor3, u, basis=None) -> np.ndarray:
    u = _check_vec(T, u)
    _check_unit(u)
    P = tangent_basis(u) if basis is None else np.asarray(basis, dtype=float)
    return P.T @ jacobian_g(T, u) @ P


class Stability(str, enum.Enum):
    NEWTON_STABLE = "newton_stable"
    POWER_STABLE_NEGATIVE = "power_stable_negative"
    POWER_STABLE_POSITIVE = "power_stable_positive"
    UNSTABLE = "unstable"

    @property
    def newton_stable(self) -> bool:
        return self is not Stability.UNSTABLE

    @property
    def power_stable(self) -> bool:
        return self in (Stability.POWER_STABLE_NEGATIVE, Stability.POWER_STABLE_POSITIVE)


@dataclass(frozen=True, eq=False)
class Eigenpair:
    u: np.ndarray
    lam: float
    stability: Stability = Stability.UNSTABLE
    residual: float = 0.0
    n_iter: int = field(default=0, compare=False)


def canonical_sign(u, lam, zero_tol=1e-12):
    """Flip ``(u, lam) -> (-u, -lam)`` so that ``lam >= 0``.

    For ``lam`` at zero the first non-negligible coordinate of ``u`` is made positive.
    """
    u = np.asarray(u, dtype=float)
    if abs(lam) <= zero_tol:
        nz = np.flatnonzero(np.abs(u) > zero_tol)
        if nz.size and u[nz[0]] < 0:
            return -u, 0.0
        return u, 0.0
    if lam < 0:
        return -u, -lam
    return u, lam


def _classify_matrix(J):
    if J.size == 0:
        return Stability.POWER_STABLE_NEGATIVE
    sv = np.linalg.svd(J, compute_uv=False)
    tol = 1e-8 * max(sv[0], 1.0)
    if sv[-1] <= tol:
        return Stability.UNSTABLE
    ev = np.linalg.eigvalsh(0.5 * (J + J.T))
    if ev[-1] < -tol:
        return Stability.POWER_STABLE_NEGATIVE
    if ev[0] > tol:
        return Stability.POWER_STABLE_POSITIVE
    return Stability.NEWTON_STABLE


def classify(T: SymTensor3, pair, basis=None) -> Stability:
    """Stability class of an eigenpair (or of a bare unit vector)."""
    u = pair.u if isinstance(pair, Eigenpair) else pair
    return _classify_matrix(projected_jacobian(T, u, basis=basis))
