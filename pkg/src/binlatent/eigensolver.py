"""Enumeration of tensor eigenpairs from many random starts.

Two iterations are available:

* orthogonal Newton correction (O-NCM): ``u <- normalize(u + P y)`` with
  ``J_p(u) y = -P^T g(u)``, attracted by every Newton-stable eigenpair;
* the shifted higher-order power method: ``u <- normalize(T(I,u,u) + alpha u)``,
  attracted by power-stable eigenpairs.

All starts are drawn up front from one generator, so the result does not depend
on the order in which starts are processed.  The inner loops run vectorized
over the whole batch of starts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, DataError
from .tensor import Eigenpair, Stability, SymTensor3, canonical_sign, classify

__all__ = [
    "SolverConfig",
    "EigenpairSet",
    "default_n_init",
    "power_shift",
    "oncm_solve",
    "power_solve",
    "enumerate_eigenpairs",
    "power_deflation",
    "dedupe",
]


def default_n_init(d: int) -> int:
    return int(min(100 * 2**d, 100_000))


@dataclass(frozen=True)
class SolverConfig:
    """Knobs for :func:`enumerate_eigenpairs`.

    ``n_init=None`` means ``100 * 2**d`` capped at 1e5; ``shift=None`` picks the
    automatic power-method shift from :func:`power_shift`.
    """

    n_init: int | None = None
    tol: float = 1e-10
    max_iter: int = 100
    power_max_iter: int = 5000
    dedup_tol: float = 1e-4
    shift: float | None = None
    mode: str = "newton"
    seed: int = 0

    def __post_init__(self):
        if self.tol <= 0 or self.dedup_tol <= 0:
            raise DataError("tol and dedup_tol must be positive")
        if self.n_init is not None and self.n_init < 1:
            raise DataError("n_init must be >= 1")
        if self.mode not in ("newton", "power", "both"):
            raise DataError(f"unknown solver mode {self.mode!r}")

    def starts(self, d: int) -> int:
        return default_n_init(d) if self.n_init is None else self.n_init


@dataclass
class EigenpairSet:
    pairs: list[Eigenpair] = field(default_factory=list)
    init_count: int = 0
    converged_count: int = 0

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __getitem__(self, i):
        return self.pairs[i]

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([p.lam for p in self.pairs])

    @property
    def vectors(self) -> np.ndarray:
        return np.array([p.u for p in self.pairs]).reshape(len(self.pairs), -1)


def power_shift(T: SymTensor3) -> float:
    """Conservative shift ``1 + sum |T_ijk|``, which bounds the spectral norm of ``T(I,I,u)``."""
    return 1.0 + float(np.abs(T.data).sum())


# ---------------------------------------------------------------------------
# batched kernels


def _apply_batch(Td, U):
    """Rows of the result are ``T(I, u, u)`` for the rows ``u`` of ``U``."""
    return np.einsum("jkl,nk,nl->nj", Td, U, U, optimize=True)


def _tangent_batch(U):
    # Householder reflector exchanging e_1 and -sign(u_1) u; columns 2..d span u^perp.
    N, d = U.shape
    W = U.copy()
    W[:, 0] += np.where(U[:, 0] >= 0, 1.0, -1.0)
    H = np.eye(d)[None] - 2.0 * W[:, :, None] * W[:, None, :] / np.einsum("ni,ni->n", W, W)[:, None, None]
    return H[:, :, 1:]


def _newton_batch(Td, U, tol, max_iter, history=None):
    """Run O-NCM on every row of ``U``.  Returns (U, residuals, converged, iters)."""
    N, d = U.shape
    U = U / np.linalg.norm(U, axis=1, keepdims=True)
    iters = np.zeros(N, dtype=int)
    conv = np.zeros(N, dtype=bool)
    failed = np.zeros(N, dtype=bool)
    res = np.full(N, np.inf)
    eye = np.eye(d)
    for it in range(max_iter + 1):
        active = ~(conv | failed)
        if not active.any():
            break
        Ua = U[active]
        TU = np.einsum("jkl,nl->njk", Td, Ua)  # T(I, I, u)
        Wv = np.einsum("njk,nk->nj", TU, Ua)  # T(I, u, u)
        lam = np.einsum("nj,nj->n", Wv, Ua)
        G = Wv - lam[:, None] * Ua
        r = np.linalg.norm(G, axis=1)
        res[active] = r
        if history is not None:
            history.append(r.copy())
        done = r <= tol
        idx = np.flatnonzero(active)
        conv[idx[done]] = True
        if it == max_iter or d == 1:
            if d == 1:
                conv[idx] = True
            break
        step = ~done
        if not step.any():
            break
        sidx = idx[step]
        Us, TUs, Ws, lams, Gs = Ua[step], TU[step], Wv[step], lam[step], G[step]
        Jg = 2.0 * TUs - 3.0 * Us[:, :, None] * Ws[:, None, :] - lams[:, None, None] * eye
        P = _tangent_batch(Us)
        Jp = np.einsum("nia,nij,njb->nab", P, Jg, P)
        rhs = -np.einsum("nia,ni->na", P, Gs)
        # singular or numerically singular Jacobians end this start
        sv = np.linalg.svd(Jp, compute_uv=False)
        ok = sv[:, -1] > 1e-13 * np.maximum(sv[:, 0], 1.0)
        failed[sidx[~ok]] = True
        if not ok.any():
            continue
        y = np.linalg.solve(Jp[ok], rhs[ok][:, :, None])[:, :, 0]
        Un = Us[ok] + np.einsum("nia,na->ni", P[ok], y)
        nrm = np.linalg.norm(Un, axis=1)
        good = np.isfinite(nrm) & (nrm > 0)
        upd = sidx[ok][good]
        U[upd] = Un[good] / nrm[good][:, None]
        iters[upd] += 1
        failed[sidx[ok][~good]] = True
    return U, res, conv, iters


def _power_batch(Td, U, alpha, tol, max_iter):
    """Shifted power iterations on every row of ``U`` (``alpha`` may be negative)."""
    N, d = U.shape
    U = U / np.linalg.norm(U, axis=1, keepdims=True)
    sign = 1.0 if alpha >= 0 else -1.0
    conv = np.zeros(N, dtype=bool)
    failed = np.zeros(N, dtype=bool)
    iters = np.zeros(N, dtype=int)
    res = np.full(N, np.inf)
    for it in range(max_iter + 1):
        active = ~(conv | failed)
        if not active.any():
            break
        idx = np.flatnonzero(active)
        Ua = U[idx]
        Wv = _apply_batch(Td, Ua)
        lam = np.einsum("nj,nj->n", Wv, Ua)
        r = np.linalg.norm(Wv - lam[:, None] * Ua, axis=1)
        res[idx] = r
        done = r <= tol
        conv[idx[done]] = True
        if it == max_iter:
            break
        step = ~done
        Un = sign * (Wv[step] + alpha * Ua[step])
        nrm = np.linalg.norm(Un, axis=1)
        good = nrm > 0
        sidx = idx[step]
        U[sidx[good]] = Un[good] / nrm[good][:, None]
        iters[sidx[good]] += 1
        failed[sidx[~good]] = True
    return U, res, conv, iters


def _make_pair(T, u, res, n_iter):
    lam = float(T.data.reshape(T.dim, -1) @ np.outer(u, u).ravel() @ u)
    u, lam = canonical_sign(u, lam)
    stab = classify(T, u)
    return Eigenpair(u=u, lam=lam, stability=stab, residual=float(res), n_iter=int(n_iter))


def _check_start(T, u0):
    u0 = np.asarray(u0, dtype=float)
    if u0.shape != (T.dim,):
        raise DataError(f"start of shape {u0.shape} does not match tensor dim {T.dim}")
    if abs(np.linalg.norm(u0) - 1.0) > 1e-8:
        raise DataError("start vector must have unit norm")
    return u0


def oncm_solve(T: SymTensor3, u0, cfg: SolverConfig = SolverConfig(), history=None) -> Eigenpair:
    """Orthogonal Newton correction from a single start.

    If ``history`` is a list, the residual ``|g(u_k)|`` of every iterate is appended.
    Raises :class:`ConvergenceError` on a singular step or when ``max_iter`` runs out.
    """
    u0 = _check_start(T, u0)
    trace = [] if history is not None else None
    U, res, conv, iters = _newton_batch(T.data, u0[None].copy(), cfg.tol, cfg.max_iter, trace)
    if history is not None:
        history.extend(float(r[0]) for r in trace)
    if not conv[0]:
        raise ConvergenceError(f"O-NCM did not converge (residual {res[0]:.3e} after {iters[0]} steps)")
    return _make_pair(T, U[0], res[0], iters[0])


def power_solve(T: SymTensor3, u0, cfg: SolverConfig = SolverConfig(), seek: str = "negative") -> Eigenpair:
    """Shifted power method from one start.

    ``seek="negative"`` uses a positive shift and converges to local maxima of
    ``T(u,u,u)`` on the sphere (negative-definite projected Jacobian);
    ``seek="positive"`` uses the mirrored negative shift.
    """
    u0 = _check_start(T, u0)
    alpha = _shift_for(T, cfg, seek)
    U, res, conv, iters = _power_batch(T.data, u0[None].copy(), alpha, cfg.tol, cfg.power_max_iter)
    if not conv[0]:
        raise ConvergenceError(f"power method did not converge (residual {res[0]:.3e})")
    return _make_pair(T, U[0], res[0], iters[0])


def _shift_for(T, cfg, seek):
    if seek not in ("negative", "positive"):
        raise DataError(f"seek must be 'negative' or 'positive', got {seek!r}")
    alpha = abs(cfg.shift) if cfg.shift is not None else power_shift(T)
    return alpha if seek == "negative" else -alpha


def _random_starts(d, n, seed):
    rng = np.random.default_rng(seed)
    U = rng.standard_normal((n, d))
    return U / np.linalg.norm(U, axis=1, keepdims=True)


def _distance(u, v):
    return min(np.linalg.norm(u - v), np.linalg.norm(u + v))


def dedupe(pairs, tol):
    """Keep the first pair of every cluster closer than ``tol`` (up to sign)."""
    kept = []
    for p in pairs:
        if all(_distance(p.u, q.u) >= tol for q in kept):
            kept.append(p)
    return kept


def enumerate_eigenpairs(T: SymTensor3, cfg: SolverConfig = SolverConfig()) -> EigenpairSet:
    """Converged, deduplicated, sign-canonical eigenpairs from random starts.

    Pairs are ordered by decreasing eigenvalue; non-converged starts are only counted.
    """
    d = T.dim
    n = cfg.starts(d)
    U0 = _random_starts(d, n, cfg.seed)
    found = []
    converged = 0
    if cfg.mode in ("newton", "both"):
        U, res, conv, iters = _newton_batch(T.data, U0.copy(), cfg.tol, cfg.max_iter)
        converged += int(conv.sum())
        found.extend(_collect(T, U, res, conv, iters, cfg.dedup_tol))
    if cfg.mode in ("power", "both"):
        for seek in ("negative", "positive"):
            U, res, conv, iters = _power_batch(T.data, U0.copy(), _shift_for(T, cfg, seek), cfg.tol, cfg.power_max_iter)
            converged += int(conv.sum())
            found.extend(_collect(T, U, res, conv, iters, cfg.dedup_tol))
    pairs = dedupe(found, cfg.dedup_tol)
    pairs.sort(key=lambda p: (-round(p.lam, 12), tuple(np.round(p.u, 12))))
    total = n * (1 if cfg.mode == "newton" else 2 if cfg.mode == "power" else 3)
    return EigenpairSet(pairs=pairs, init_count=total, converged_count=converged)


def _collect(T, U, res, conv, iters, tol):
    # cluster before the (comparatively costly) per-pair classification
    idx = np.flatnonzero(conv)
    if idx.size == 0:
        return []
    Uc = U[idx]
    reps = []
    rep_vecs = np.empty((0, T.dim))
    for n_, k in enumerate(idx):
        u = Uc[n_]
        if rep_vecs.shape[0]:
            dist = np.minimum(np.linalg.norm(rep_vecs - u, axis=1), np.linalg.norm(rep_vecs + u, axis=1))
            if dist.min() < tol:
                continue
        reps.append(k)
        rep_vecs = np.vstack([rep_vecs, u])
    return [_make_pair(T, U[k], res[k], iters[k]) for k in reps]


def power_deflation(T: SymTensor3, n_components: int, cfg: SolverConfig = SolverConfig(), polish: bool = True):
    """Greedy decomposition of an (approximately) orthogonally decomposable tensor.

    Each round runs the positively shifted power method from the configured starts,
    keeps the converged pair with the largest eigenvalue, optionally polishes it
    with Newton steps on the deflated tensor, and subtracts ``lam u (x) u (x) u``.
    Returned pairs are classified against the original tensor.
    """
    d = T.dim
    resid = T.data.copy()
    out = []
    n = cfg.starts(d)
    for r in range(n_components):
        Tr = SymTensor3(resid)
        U0 = _random_starts(d, n, (cfg.seed, r))
        U, res, conv, iters = _power_batch(Tr.data, U0, _shift_for(Tr, cfg, "negative"), cfg.tol, cfg.power_max_iter)
        if not conv.any():
            raise ConvergenceError(f"no start converged in deflation round {r}")
        cand = np.flatnonzero(conv)
        lam = np.einsum("nj,nj->n", _apply_batch(Tr.data, U[cand]), U[cand])
        best = cand[int(np.argmax(lam))]
        u = U[best]
        if polish:
            Up, _, ok, _ = _newton_batch(Tr.data, u[None].copy(), min(cfg.tol, 1e-13), 20)
            if ok[0]:
                u = Up[0]
        lam_u = float(u @ _apply_batch(Tr.data, u[None])[0])
        u, lam_u = canonical_sign(u, lam_u)
        resid = resid - lam_u * np.einsum("i,j,k->ijk", u, u, u)
        g = _apply_batch(T.data, u[None])[0]
        out.append(Eigenpair(u=u, lam=lam_u, stability=classify(T, u),
                             residual=float(np.linalg.norm(g - (g @ u) * u)), n_iter=int(iters[best])))
    return out
