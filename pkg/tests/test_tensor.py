from itertools import permutations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from binlatent.errors import DataError, DimensionError
from binlatent.tensor import (
    Eigenpair,
    Stability,
    SymTensor3,
    canonical_sign,
    classify,
    diagonal,
    jacobian_g,
    mode_apply,
    multilinear,
    projected_jacobian,
    random_symmetric,
    rank_one,
    residual_g,
    symmetrize,
    tangent_basis,
)

from oracles import fd_projected_jacobian, loop_mode_apply, loop_multilinear, loop_residual

dims = st.integers(min_value=1, max_value=6)
seeds = st.integers(min_value=0, max_value=2**32 - 1)


def _unit(rng, d):
    u = rng.standard_normal(d)
    return u / np.linalg.norm(u)


def _random_basis(rng, u):
    d = u.size
    Q, _ = np.linalg.qr(np.column_stack([u, rng.standard_normal((d, d - 1))]))
    return Q[:, 1:]


# -- SymTensor3 ---------------------------------------------------------------


@given(dims, seeds)
def test_construction_is_exactly_symmetric(d, seed):
    T = SymTensor3(np.random.default_rng(seed).standard_normal((d, d, d)))
    for p in permutations(range(3)):
        assert np.array_equal(T.data, np.transpose(T.data, p))


@given(dims, seeds)
def test_symmetrization_is_idempotent(d, seed):
    T = random_symmetric(d, seed)
    assert np.array_equal(SymTensor3(T.data).data, T.data)
    assert np.array_equal(symmetrize(T.data), T.data)


def test_symmetrize_averages_permutations():
    a = np.zeros((2, 2, 2))
    a[0, 0, 1] = 3.0
    s = symmetrize(a)
    assert s[0, 0, 1] == s[0, 1, 0] == s[1, 0, 0] == 1.0


def test_rejects_nonfinite_and_noncubic():
    a = np.zeros((2, 2, 2))
    a[0, 0, 0] = np.nan
    with pytest.raises(DataError):
        SymTensor3(a)
    with pytest.raises(DimensionError):
        SymTensor3(np.zeros((2, 2, 3)))


def test_data_is_read_only():
    T = random_symmetric(3, 0)
    with pytest.raises(ValueError):
        T.data[0, 0, 0] = 1.0


def test_arithmetic():
    A, B = random_symmetric(3, 1), random_symmetric(3, 2)
    assert np.allclose((A + B).data, A.data + B.data)
    assert np.allclose((A - B).data, A.data - B.data)
    assert np.allclose((2 * A).data, 2 * A.data)
    assert A.frobenius() == pytest.approx(np.sqrt(np.sum(A.data**2)))


# -- mode_apply / multilinear ---------------------------------------------------


def test_mode_apply_diagonal_unit():
    T = diagonal([2.0, 3.0, 5.0])
    assert np.array_equal(mode_apply(T, [1.0, 0, 0]), [2.0, 0, 0])


@given(dims, seeds)
def test_mode_apply_rank_one(d, seed):
    rng = np.random.default_rng(seed)
    v, u = rng.standard_normal(d), rng.standard_normal(d)
    assert np.allclose(mode_apply(rank_one(v), u), (v @ u) ** 2 * v)


def test_mode_apply_matches_loop():
    rng = np.random.default_rng(3)
    T, u = random_symmetric(3, rng), rng.standard_normal(3)
    assert np.allclose(mode_apply(T, u), loop_mode_apply(T.data, u), atol=1e-13)


def test_mode_apply_dimension_mismatch():
    with pytest.raises(DimensionError):
        mode_apply(random_symmetric(3, 0), np.ones(2))


def test_multilinear_identity_and_scalar():
    rng = np.random.default_rng(4)
    T, u = random_symmetric(3, rng), rng.standard_normal(3)
    assert np.allclose(multilinear(T, np.eye(3), np.eye(3), np.eye(3)).data, T.data)
    val = multilinear(T, u, u, u)
    assert val.data.shape == (1, 1, 1)
    assert val.data[0, 0, 0] == pytest.approx(u @ mode_apply(T, u))


def test_multilinear_matches_six_loop():
    rng = np.random.default_rng(5)
    T = random_symmetric(3, rng)
    A = rng.standard_normal((3, 2))
    out = multilinear(T, A, A, A)
    assert isinstance(out, SymTensor3)
    assert np.allclose(out.data, loop_multilinear(T.data, A, A, A), atol=1e-12)
    B, C = rng.standard_normal((3, 1)), rng.standard_normal((3, 4))
    mixed = multilinear(T, A, B, C)
    assert mixed.shape == (2, 1, 4)
    assert np.allclose(mixed, loop_multilinear(T.data, A, B, C), atol=1e-12)


def test_multilinear_dimension_mismatch():
    with pytest.raises(DimensionError):
        multilinear(random_symmetric(3, 0), np.eye(2), np.eye(3), np.eye(3))


# -- residual, Jacobian ------------------------------------------------------------


def test_residual_zero_at_diagonal_eigenvector():
    assert np.array_equal(residual_g(diagonal([1.0, 2.0]), [1.0, 0.0]), [0.0, 0.0])


@given(dims, seeds)
def test_residual_orthogonal_to_u(d, seed):
    rng = np.random.default_rng(seed)
    T, u = random_symmetric(d, rng), _unit(rng, d)
    g = residual_g(T, u)
    assert abs(g @ u) <= 1e-12 * max(1.0, np.abs(T.data).sum())


def test_residual_matches_loop():
    rng = np.random.default_rng(6)
    T, u = random_symmetric(4, rng), _unit(rng, 4)
    assert np.allclose(residual_g(T, u), loop_residual(T.data, u), atol=1e-13)


def test_residual_rejects_non_unit():
    with pytest.raises(DataError):
        residual_g(random_symmetric(2, 0), [1.0, 1.0])


def test_projected_jacobian_diagonal_d2():
    # central-difference oracle gives [-a1] at u = e1
    T = diagonal([1.7, 0.4])
    u = np.array([1.0, 0.0])
    P = tangent_basis(u)
    Jp = projected_jacobian(T, u)
    assert Jp.shape == (1, 1)
    assert Jp[0, 0] == pytest.approx(-1.7, abs=1e-12)
    assert np.allclose(fd_projected_jacobian(T.data, u, P), [[-1.7]], atol=1e-8)


@given(st.integers(2, 6), seeds)
def test_projected_jacobian_matches_finite_differences(d, seed):
    rng = np.random.default_rng(seed)
    T, u = random_symmetric(d, rng), _unit(rng, d)
    P = _random_basis(rng, u)
    Jp = projected_jacobian(T, u, basis=P)
    fd = fd_projected_jacobian(T.data, u, P)
    assert np.linalg.norm(Jp - fd) <= 1e-5 * max(np.linalg.norm(fd), 1e-3)


def test_full_jacobian_formula_matches_finite_differences():
    rng = np.random.default_rng(7)
    T, u = random_symmetric(4, rng), _unit(rng, 4)
    fd = fd_projected_jacobian(T.data, u, np.eye(4))
    assert np.allclose(jacobian_g(T, u), fd, atol=1e-7)


@given(st.integers(1, 7), seeds)
def test_tangent_basis_orthonormal_complement(d, seed):
    u = _unit(np.random.default_rng(seed), d)
    P = tangent_basis(u)
    assert P.shape == (d, d - 1)
    assert np.allclose(P.T @ P, np.eye(d - 1), atol=1e-12)
    assert np.allclose(P.T @ u, 0.0, atol=1e-12)


def test_odeco_eigenvector_negative_definite():
    rng = np.random.default_rng(8)
    Q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
    w = np.array([0.5, 1.0, 2.0, 3.0])
    T = SymTensor3(sum(rank_one(Q[:, i], w[i]).data for i in range(4)))
    for i in range(4):
        ev = np.linalg.eigvalsh(projected_jacobian(T, Q[:, i]))
        assert np.all(ev < 0)


# -- classification ----------------------------------------------------------------


def test_classify_diagonal_power_stable_negative():
    T = diagonal([1.3, 0.6])
    assert classify(T, np.array([1.0, 0.0])) is Stability.POWER_STABLE_NEGATIVE


def test_classify_zero_jacobian_unstable():
    # e1 is an eigenvector with lambda = 2 and J_p = 2 T_122 - lambda = 0
    t = np.zeros((2, 2, 2))
    t[0, 0, 0] = 2.0
    t[0, 1, 1] = t[1, 0, 1] = t[1, 1, 0] = 1.0
    t[1, 1, 1] = 0.3
    T = SymTensor3(t)
    u = np.array([1.0, 0.0])
    assert np.allclose(residual_g(T, u), 0.0)
    assert np.allclose(projected_jacobian(T, u), 0.0)
    assert classify(T, u) is Stability.UNSTABLE


def test_classify_positive_definite():
    # J_p = 2 T_122 - lambda > 0 gives the positive class
    t = np.zeros((2, 2, 2))
    t[0, 0, 0] = 1.0
    t[0, 1, 1] = t[1, 0, 1] = t[1, 1, 0] = 2.0
    assert classify(SymTensor3(t), np.array([1.0, 0.0])) is Stability.POWER_STABLE_POSITIVE


@given(st.integers(2, 5), seeds)
def test_classify_is_basis_invariant(d, seed):
    rng = np.random.default_rng(seed)
    T, u = random_symmetric(d, rng), _unit(rng, d)
    P1, P2 = _random_basis(rng, u), _random_basis(rng, u)
    assert classify(T, u, basis=P1) is classify(T, u, basis=P2)


def test_classify_accepts_eigenpair():
    T = diagonal([1.0, 2.0])
    pair = Eigenpair(u=np.array([0.0, 1.0]), lam=2.0)
    assert classify(T, pair) is Stability.POWER_STABLE_NEGATIVE


def test_stability_flags():
    assert Stability.POWER_STABLE_NEGATIVE.power_stable and Stability.POWER_STABLE_NEGATIVE.newton_stable
    assert Stability.NEWTON_STABLE.newton_stable and not Stability.NEWTON_STABLE.power_stable
    assert not Stability.UNSTABLE.newton_stable


def test_canonical_sign():
    u, lam = canonical_sign(np.array([0.6, -0.8]), -2.0)
    assert lam == 2.0 and np.array_equal(u, [-0.6, 0.8])
    u, lam = canonical_sign(np.array([0.0, -1.0]), 0.0)
    assert lam == 0.0 and np.array_equal(u, [0.0, 1.0])
