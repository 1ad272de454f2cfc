import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dlr.linalg import (
    frobenius_norm, kron_all, lowrank_difference_norm, lowrank_norm, matricize, mode_product,
    multi_mode_product, orthonormality_defect, qr, qr_orth, svd, tensorize, augmented_basis,
)


def test_qr_orth_already_orthonormal():
    M = np.eye(3)[:, :2]
    assert np.array_equal(qr_orth(M), M)


def test_qr_orth_column_scaling_positive_signs():
    M = np.array([[2.0, 0], [0, 0], [0, 3]])
    np.testing.assert_allclose(qr_orth(M), [[1, 0], [0, 0], [0, 1]], atol=1e-15)


def test_qr_orth_rank_deficient(rng):
    M = rng.standard_normal((6, 2)) @ rng.standard_normal((2, 4))
    Q = qr_orth(M)
    assert Q.shape == (6, 4)
    np.testing.assert_allclose(Q.T @ Q, np.eye(4), atol=1e-12)
    np.testing.assert_allclose(Q @ Q.T @ M, M, atol=1e-12)


def test_qr_orth_wide_rejected():
    with pytest.raises(ValueError, match="k exceeds n"):
        qr_orth(np.ones((2, 3)))


def test_qr_orth_nonfinite_rejected():
    with pytest.raises(ValueError, match="non-finite"):
        qr_orth(np.array([[np.nan], [1.0]]))


def test_qr_orth_deterministic(rng):
    M = rng.standard_normal((30, 7))
    assert qr_orth(M).tobytes() == qr_orth(M.copy()).tobytes()


def test_qr_diag_nonnegative_complex(rng):
    M = rng.standard_normal((8, 4)) + 1j * rng.standard_normal((8, 4))
    Q, R = qr(M)
    d = np.diagonal(R)
    assert np.all(d.real >= 0) and np.allclose(d.imag, 0)
    np.testing.assert_allclose(Q @ R, M, atol=1e-13)


def test_augmented_basis_spans_both(rng):
    old = qr_orth(rng.standard_normal((10, 3)))
    new = rng.standard_normal((10, 3))
    Q = augmented_basis(new, old)
    assert Q.shape == (10, 6)
    np.testing.assert_allclose(Q @ (Q.T @ old), old, atol=1e-13)
    np.testing.assert_allclose(Q @ (Q.T @ new), new, atol=1e-12)


def test_augmented_basis_caps_at_row_count(rng):
    Q = augmented_basis(rng.standard_normal((4, 3)), qr_orth(rng.standard_normal((4, 3))))
    assert Q.shape == (4, 4)
    assert orthonormality_defect(Q) < 1e-13


@pytest.mark.parametrize("M, expected", [
    (np.diag([3.0, 1.0]), [3, 1]),
    (np.zeros((2, 2)), [0, 0]),
    (np.ones((2, 2)), [2, 0]),
])
def test_svd_examples(M, expected):
    _, s, _ = svd(M)
    np.testing.assert_allclose(s, expected, atol=1e-14)


def test_svd_reconstructs(rng):
    M = rng.standard_normal((7, 5))
    P, s, Q = svd(M)
    np.testing.assert_allclose((P * s) @ Q.T, M, atol=1e-13)
    assert np.all(np.diff(s) <= 0)


def test_svd_nonfinite():
    with pytest.raises(ValueError, match="non-finite"):
        svd(np.array([[np.inf, 0], [0, 1]]))


def test_matricize_order_two_is_identity():
    T = np.arange(4.0).reshape(2, 2)
    assert np.array_equal(matricize(T, 0), T)


def test_matricize_unit_tensor():
    T = np.zeros((2, 2, 2))
    T[0, 0, 0] = 1
    M = matricize(T, 1)
    expected = np.zeros((2, 4))
    expected[0, 0] = 1
    assert np.array_equal(M, expected)


def test_matricize_column_ordering():
    # column index of entry (i0, i1, i2) in the mode-1 unfolding is i0 + 2*i2
    T = np.arange(24.0).reshape(2, 3, 4)
    M = matricize(T, 1)
    for i0 in range(2):
        for i1 in range(3):
            for i2 in range(4):
                assert M[i1, i0 + 2 * i2] == T[i0, i1, i2]


def test_round_trip_all_modes(rng):
    T = rng.standard_normal((2, 3, 4))
    for i in range(3):
        assert np.array_equal(tensorize(i, matricize(T, i), T.shape), T)


def test_tensorize_shape_mismatch():
    with pytest.raises(ValueError, match="shape mismatch"):
        tensorize(0, np.zeros((2, 5)), (2, 3, 4))


def test_order_cap():
    with pytest.raises(ValueError):
        matricize(np.zeros((1,) * 9), 0)


def test_mode_product_identity(rng):
    T = rng.standard_normal((3, 4, 5))
    assert np.allclose(mode_product(T, 1, np.eye(4)), T, atol=0)


def test_mode_product_shape_mismatch(rng):
    with pytest.raises(ValueError, match="shape mismatch"):
        mode_product(np.zeros((3, 4)), 0, np.zeros((2, 4)))


def test_mode_product_kronecker_identity(rng):
    # Mat_i(T x_j U_j) = U_i Mat_i(T) (kron of the other U_j in reverse order)^T
    dims, new = (3, 4, 5), (2, 6, 3)
    T = rng.standard_normal(dims)
    Us = [rng.standard_normal((m, n)) for m, n in zip(new, dims)]
    Y = multi_mode_product(T, Us)
    for i in range(3):
        others = [Us[j] for j in reversed(range(3)) if j != i]
        rhs = Us[i] @ matricize(T, i) @ kron_all(others).T
        np.testing.assert_allclose(matricize(Y, i), rhs, atol=1e-13)


def test_mode_product_brute_force(rng):
    T = rng.standard_normal((2, 3, 2))
    M = rng.standard_normal((4, 3))
    out = np.zeros((2, 4, 2))
    for a in range(2):
        for b in range(4):
            for c in range(2):
                out[a, b, c] = sum(M[b, j] * T[a, j, c] for j in range(3))
    np.testing.assert_allclose(mode_product(T, 1, M), out, atol=1e-14)


@pytest.mark.parametrize("X, expected", [
    (np.eye(3), np.sqrt(3)),
    (np.zeros((2, 2)), 0.0),
    (np.array([[3.0, 4.0]]), 5.0),
])
def test_frobenius_examples(X, expected):
    assert frobenius_norm(X) == pytest.approx(expected, abs=1e-15)


def test_lowrank_norms(rng):
    U1, V1 = qr_orth(rng.standard_normal((9, 3))), qr_orth(rng.standard_normal((7, 3)))
    U2, V2 = qr_orth(rng.standard_normal((9, 2))), qr_orth(rng.standard_normal((7, 2)))
    S1, S2 = rng.standard_normal((3, 3)), rng.standard_normal((2, 2))
    A, B = U1 @ S1 @ V1.T, U2 @ S2 @ V2.T
    assert lowrank_norm(U1, S1, V1) == pytest.approx(np.linalg.norm(A), rel=1e-13)
    assert lowrank_difference_norm(U1, S1, V1, U2, S2, V2) == pytest.approx(np.linalg.norm(A - B), rel=1e-12)


dims_strategy = st.lists(st.integers(1, 4), min_size=2, max_size=4)


@settings(max_examples=40, deadline=None)
@given(dims=dims_strategy, seed=st.integers(0, 10_000), data=st.data())
def test_round_trip_property(dims, seed, data):
    mode = data.draw(st.integers(0, len(dims) - 1))
    T = np.random.default_rng(seed).standard_normal(dims)
    M = matricize(T, mode)
    assert M.shape == (dims[mode], T.size // dims[mode])
    assert np.array_equal(tensorize(mode, M, dims), T)


@settings(max_examples=40, deadline=None)
@given(dims=dims_strategy, seed=st.integers(0, 10_000), data=st.data())
def test_mode_product_unfolding_property(dims, seed, data):
    mode = data.draw(st.integers(0, len(dims) - 1))
    rng = np.random.default_rng(seed)
    T = rng.standard_normal(dims)
    M = rng.standard_normal((3, dims[mode]))
    np.testing.assert_allclose(matricize(mode_product(T, mode, M), mode), M @ matricize(T, mode), atol=1e-13)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 12), k=st.integers(1, 12), seed=st.integers(0, 10_000))
def test_qr_orth_property(n, k, seed):
    if k > n:
        n, k = k, n
    M = np.random.default_rng(seed).standard_normal((n, k))
    Q = qr_orth(M)
    assert orthonormality_defect(Q) < 1e-12
    np.testing.assert_allclose(Q @ (Q.T @ M), M, atol=1e-12)
