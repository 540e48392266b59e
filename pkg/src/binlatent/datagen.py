"""Synthetic instances of ``x = W^T h + sigma eps`` and of the binomial admixture model.

Every generator is a pure function of its arguments and ``seed`` (anything
``numpy.random.default_rng`` accepts).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from itertools import combinations

import numpy as np

from .errors import DataError, DimensionError

__all__ = [
    "GaussianRoundLaw",
    "AtomLaw",
    "FixationLaw",
    "InstanceSpec",
    "Instance",
    "gen_W",
    "gen_H_gaussian_round",
    "gen_H_atoms",
    "gen_H_rigid_block",
    "gen_H_fixation",
    "gen_X",
    "gen_dirichlet_W",
    "gen_binomial_X",
    "default_gaussian_law",
    "make_instance",
    "is_rigid_on_lattice",
]


@dataclass(frozen=True)
class GaussianRoundLaw:
    """``h = 1{r >= 1/2}`` with ``r ~ N(a, R)``."""

    a: tuple
    R: tuple

    kind = "gaussian_round"


@dataclass(frozen=True)
class AtomLaw:
    atoms: tuple
    probs: tuple

    kind = "atoms"


@dataclass(frozen=True)
class FixationLaw:
    """Allele frequencies for the admixture model, drifted from a shared ancestor.

    Each locus has an ancestral frequency ``q ~ Beta(q_a, q_b)``; each of the
    ``d`` populations then carries ``Beta(q (1 - fst) / fst, (1 - q) (1 - fst) / fst)``
    (Balding-Nichols).  For ``fst`` near one most frequencies sit at 0 or 1, i.e.
    the allele is fixed in or absent from a population, and populations are
    dependent through ``q``.
    """

    fst: float = 0.9
    q_a: float = 1.0
    q_b: float = 3.0

    kind = "fixation"


def default_gaussian_law(d: int) -> GaussianRoundLaw:
    """Correlated thresholded Gaussian used by the simulation scripts and tests.

    Marginals ``P(h_i = 1)`` lie between about 0.31 and 0.38 and the hidden
    units are positively correlated, so the law is neither a product nor a
    mixture of mutually exclusive units.  Marginals near 1/2 are avoided: they
    make ``2 Omega(I, I, e_i) - Sigma`` nearly singular.
    """
    a = np.linspace(0.25, 0.35, d)
    R = 0.25 * (0.8 * np.eye(d) + 0.2 * np.ones((d, d)))
    return GaussianRoundLaw(a=tuple(a), R=tuple(map(tuple, R)))


def _rng(seed):
    return np.random.default_rng(seed)


def gen_W(d: int, m: int, seed=None) -> np.ndarray:
    """``d x m`` matrix whose columns are i.i.d. uniform on the unit sphere."""
    if m < d:
        raise DimensionError(f"need m >= d, got m={m}, d={d}")
    rng = _rng(seed)
    while True:
        G = rng.standard_normal((d, m))
        W = G / np.linalg.norm(G, axis=0, keepdims=True)
        if np.linalg.matrix_rank(W) == d:
            return W


def gen_H_gaussian_round(n: int, a, R, seed=None) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    R = np.asarray(R, dtype=float)
    d = a.size
    if R.shape != (d, d) or not np.allclose(R, R.T):
        raise DataError("R must be a symmetric d x d matrix")
    ev, V = np.linalg.eigh(0.5 * (R + R.T))
    if ev.min() < -1e-12 * max(1.0, abs(ev).max()):
        raise DataError("R must be positive semidefinite")
    root = V * np.sqrt(np.clip(ev, 0, None))
    r = a[:, None] + root @ _rng(seed).standard_normal((d, n))
    return (r >= 0.5).astype(float)


def gen_H_atoms(n: int, atoms, probs, seed=None) -> np.ndarray:
    atoms = np.asarray(atoms, dtype=float)
    probs = np.asarray(probs, dtype=float)
    if abs(probs.sum() - 1) > 1e-9 or np.any(probs < 0):
        raise DataError("atom probabilities must be non-negative and sum to one")
    idx = _rng(seed).choice(len(probs), size=n, p=probs / probs.sum())
    return atoms[idx].T.copy()


def rigid_block(d: int) -> np.ndarray:
    cols = [np.eye(d)[i] for i in range(d)]
    cols += [np.eye(d)[i] + np.eye(d)[j] for i, j in combinations(range(d), 2)]
    return np.array(cols).T.reshape(d, -1)


def gen_H_rigid_block(d: int, n: int, seed=None, fill=None) -> np.ndarray:
    """All ``e_i`` and ``e_i + e_j`` first, then ``n - d(d+1)/2`` columns from ``fill``.

    ``fill(k, rng)`` returns a ``d x k`` binary matrix; the default is the
    thresholded Gaussian of :func:`default_gaussian_law`.
    """
    B = rigid_block(d)
    if n < B.shape[1]:
        raise DataError(f"need n >= {B.shape[1]} columns for the rigid block, got {n}")
    k = n - B.shape[1]
    rng = _rng(seed)
    if k == 0:
        return B
    if fill is None:
        law = default_gaussian_law(d)
        rest = gen_H_gaussian_round(k, law.a, law.R, rng)
    else:
        rest = np.asarray(fill(k, rng), dtype=float)
    return np.hstack([B, rest])


def gen_H_fixation(d: int, n: int, fst: float = 0.9, q_a: float = 1.0, q_b: float = 3.0,
                   seed=None) -> np.ndarray:
    if not 0 < fst < 1:
        raise DataError("fst must lie in (0, 1)")
    if q_a <= 0 or q_b <= 0:
        raise DataError("ancestral Beta parameters must be positive")
    rng = _rng(seed)
    q = np.clip(rng.beta(q_a, q_b, size=n), 1e-6, 1 - 1e-6)
    c = (1 - fst) / fst
    return rng.beta(np.broadcast_to(q * c, (d, n)), np.broadcast_to((1 - q) * c, (d, n)))


def gen_X(W, H, sigma: float, seed=None) -> np.ndarray:
    W = np.asarray(W, dtype=float)
    H = np.asarray(H, dtype=float)
    if W.shape[0] != H.shape[0]:
        raise DimensionError(f"W has {W.shape[0]} rows but H has {H.shape[0]}")
    X = W.T @ H
    if sigma:
        X = X + sigma * _rng(seed).standard_normal(X.shape)
    return X


def gen_dirichlet_W(d: int, m: int, alpha: float, seed=None) -> np.ndarray:
    """Columns i.i.d. symmetric ``Dirichlet(alpha)``; every column sums to one."""
    if alpha <= 0:
        raise DataError("alpha must be positive")
    W = _rng(seed).dirichlet(alpha * np.ones(d), size=m).T
    return W / W.sum(axis=0, keepdims=True)


def gen_binomial_X(W, H_freq, seed=None) -> np.ndarray:
    """Genotype matrix with entries ``Binomial(2, F) / 2`` where ``F = W^T H``."""
    F = np.asarray(W, dtype=float).T @ np.asarray(H_freq, dtype=float)
    F = np.where(np.abs(F) < 1e-12, 0.0, F)
    F = np.where(np.abs(F - 1) < 1e-12, 1.0, F)
    if F.min() < 0 or F.max() > 1:
        raise DataError("allele frequencies F = W^T H must lie in [0, 1]")
    return _rng(seed).binomial(2, F) / 2.0


@dataclass(frozen=True)
class InstanceSpec:
    d: int
    m: int
    n: int
    sigma: float = 0.0
    hidden_law: object = None
    w_law: str = "sphere"
    alpha: float = 1.0
    observation: str = "gaussian"
    rigid: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.d < 1 or self.n < 1:
            raise DataError("d and n must be positive")
        if self.m < self.d:
            raise DimensionError(f"need m >= d, got m={self.m}, d={self.d}")
        if self.sigma < 0:
            raise DataError("sigma must be non-negative")
        if self.w_law not in ("sphere", "dirichlet"):
            raise DataError(f"unknown w_law {self.w_law!r}")
        if self.observation not in ("gaussian", "binomial"):
            raise DataError(f"unknown observation model {self.observation!r}")

    def to_dict(self) -> dict:
        out = asdict(self)
        law = self.law()
        out["hidden_law"] = {"kind": law.kind, **asdict(law)}
        return out

    def law(self):
        if self.hidden_law is not None:
            return self.hidden_law
        if self.observation == "binomial":
            return FixationLaw()
        return default_gaussian_law(self.d)


@dataclass(frozen=True, eq=False)
class Instance:
    spec: InstanceSpec
    W: np.ndarray
    H: np.ndarray
    X: np.ndarray = field(repr=False)


def make_instance(spec: InstanceSpec) -> Instance:
    """Draw ``W``, ``H`` and ``X`` from independent child seeds of ``spec.seed``."""
    sw, sh, sx = np.random.SeedSequence(spec.seed).spawn(3)
    if spec.w_law == "sphere":
        W = gen_W(spec.d, spec.m, sw)
    else:
        W = gen_dirichlet_W(spec.d, spec.m, spec.alpha, sw)
    law = spec.law()
    if isinstance(law, FixationLaw):
        H = gen_H_fixation(spec.d, spec.n, law.fst, law.q_a, law.q_b, sh)
    elif isinstance(law, AtomLaw):
        H = gen_H_atoms(spec.n, law.atoms, law.probs, sh)
    elif isinstance(law, GaussianRoundLaw):
        if spec.rigid:
            H = gen_H_rigid_block(spec.d, spec.n, sh, fill=lambda k, r: gen_H_gaussian_round(k, law.a, law.R, r))
        else:
            H = gen_H_gaussian_round(spec.n, law.a, law.R, sh)
    else:
        raise DataError(f"unsupported hidden law {law!r}")
    if spec.observation == "binomial":
        X = gen_binomial_X(W, H, sx)
    else:
        X = gen_X(W, H, spec.sigma, sx)
    return Instance(spec=spec, W=W, H=H, X=X)


def is_rigid_on_lattice(H, lattice=(-1.0, -0.5, 0.0, 0.5, 1.0)) -> bool:
    """Check the rigidity equivalence over every non-zero ``u`` with entries in ``lattice``.

    Only ``u = e_i`` may give a binary ``u^T H``.  Exact for rational lattices
    since the comparisons involve small dyadic numbers.
    """
    from itertools import product

    H = np.asarray(H, dtype=float)
    d = H.shape[0]
    eye = np.eye(d)
    for u in product(lattice, repeat=d):
        u = np.array(u)
        if not u.any():
            continue
        proj = u @ H
        binary = np.all((proj == 0) | (proj == 1))
        is_unit = any(np.array_equal(u, e) for e in eye)
        if binary != is_unit:
            return False
    return True
