"""Slow, obviously-correct reference implementations used only by the tests.

Nothing here imports the package's numerical code: loops over indices,
quadrature and brute-force enumeration stand in for the vectorized versions.
"""

from __future__ import annotations

from itertools import permutations, product

import numpy as np
from scipy import integrate
from scipy.stats import norm


def loop_mode_apply(T, u):
    d = len(u)
    return np.array([sum(T[j, k, l] * u[k] * u[l] for k in range(d) for l in range(d)) for j in range(d)])


def loop_multilinear(T, A, B, C):
    d = T.shape[0]
    d1, d2, d3 = A.shape[1], B.shape[1], C.shape[1]
    out = np.zeros((d1, d2, d3))
    for i1, i2, i3 in product(range(d1), range(d2), range(d3)):
        s = 0.0
        for j1, j2, j3 in product(range(d), repeat=3):
            s += A[j1, i1] * B[j2, i2] * C[j3, i3] * T[j1, j2, j3]
        out[i1, i2, i3] = s
    return out


def loop_residual(T, u):
    w = loop_mode_apply(T, u)
    return w - float(u @ w) * u


def g_any(T, x):
    """The residual function extended off the sphere (for finite differences)."""
    w = loop_mode_apply(T, x)
    return w - float(x @ w) * x


def fd_projected_jacobian(T, u, P, h=1e-5):
    cols = [(g_any(T, u + h * P[:, k]) - g_any(T, u - h * P[:, k])) / (2 * h) for k in range(P.shape[1])]
    return P.T @ np.column_stack(cols)


def loop_moments(X):
    m, n = X.shape
    mu = np.zeros(m)
    M = np.zeros((m, m))
    T = np.zeros((m, m, m))
    for j in range(n):
        x = X[:, j]
        mu += x
        for a in range(m):
            for b in range(m):
                M[a, b] += x[a] * x[b]
                for c in range(m):
                    T[a, b, c] += x[a] * x[b] * x[c]
    return mu / n, M / n, T / n


def loop_noise_tensor(mu):
    m = len(mu)
    E = np.zeros((m, m, m))
    eye = np.eye(m)
    for i in range(m):
        E += np.einsum("a,b,c->abc", mu, eye[i], eye[i])
        E += np.einsum("a,b,c->abc", eye[i], mu, eye[i])
        E += np.einsum("a,b,c->abc", eye[i], eye[i], mu)
    return E


def enum_latent_moments(atoms, probs):
    d = atoms.shape[1]
    phi, S, O = np.zeros(d), np.zeros((d, d)), np.zeros((d, d, d))
    for h, p in zip(atoms, probs):
        phi += p * h
        for i in range(d):
            for j in range(d):
                S[i, j] += p * h[i] * h[j]
                for k in range(d):
                    O[i, j, k] += p * h[i] * h[j] * h[k]
    return phi, S, O


def gmm2_quad(t, lam, var):
    """CDF of the two-component mixture by integrating its density."""
    s = np.sqrt(var)
    w1 = 1.0 / lam**2

    def dens(x):
        return (1 - w1) * norm.pdf(x, 0, s) + w1 * norm.pdf(x, 1, s)

    lo = min(-12 * s, t - 1)
    val, _ = integrate.quad(dens, lo, t, epsabs=1e-14, epsrel=1e-13, limit=200)
    return val


def brute_ks(z, cdf):
    """``sup_t |F_n(t) - G(t)|`` by checking the value at and just left of each sample."""
    z = np.asarray(z, dtype=float)
    n = len(z)
    best = 0.0
    for t in z:
        at = np.sum(z <= t) / n
        left = np.sum(z < t) / n
        g = cdf(t)
        best = max(best, abs(at - g), abs(left - g))
    return best


def brute_aligned_error(A, B):
    d = A.shape[0]
    return min(np.linalg.norm(A[list(p)] - B) for p in permutations(range(d)))


def loop_wls(X, W, sigma, K):
    """One weighted least-squares step, sample by sample."""
    d, m = W.shape
    codes = np.array(list(product((0, 1), repeat=d)), dtype=float)
    A = np.zeros((d, d))
    B = np.zeros((d, m))
    for x in X.T:
        ll = np.array([-np.sum((x - W.T @ h) ** 2) / (2 * sigma**2) for h in codes])
        top = np.argsort(-ll, kind="stable")[:K]
        w = np.exp(ll[top] - ll[top].max())
        w /= w.sum()
        for wk, k in zip(w, top):
            h = codes[k]
            A += wk * np.outer(h, h)
            B += wk * np.outer(h, x)
    return np.linalg.solve(A, B)


def distinct_predicate_mask(T):
    m = T.shape[0]
    out = np.zeros_like(T)
    for i in range(m):
        for j in range(m):
            for k in range(m):
                if i != j and j != k and i != k:
                    out[i, j, k] = T[i, j, k]
    return out


def expected_rounding_loop(u, atoms, probs):
    total = 0.0
    for h, p in zip(atoms, probs):
        s = float(np.dot(u, h))
        total += p * min(s**2, (s - 1) ** 2)
    return total


def diagonal_third_pair(a):
    """The eigenpair with every coordinate non-zero of a diagonal tensor:
    ``a_i u_i^2 = lam u_i`` gives ``u_i = lam / a_i`` and ``|u| = 1``."""
    a = np.asarray(a, dtype=float)
    lam = 1.0 / np.sqrt(np.sum(1.0 / a**2))
    return lam / a, lam


def orthant_sigma_d2(a, R):
    """Exact ``E[h h^T]`` for ``h = 1{r >= 1/2}``, ``r ~ N(a, R)``, d = 2."""
    from scipy.stats import multivariate_normal

    a = np.asarray(a, dtype=float)
    R = np.asarray(R, dtype=float)
    p = norm.sf((0.5 - a) / np.sqrt(np.diag(R)))
    # P(r1 >= 1/2, r2 >= 1/2) = P(-r <= -1/2) with -r ~ N(-a, R)
    both = multivariate_normal(mean=-a, cov=R).cdf(np.array([-0.5, -0.5]))
    return np.array([[p[0], both], [both, p[1]]])
