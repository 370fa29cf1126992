"""Tests for the dense linear-algebra layer."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from infrastructure.linalg import (
    Tolerance,
    complete_unitary_rows,
    haar_unitary,
    is_unitary,
    kron,
    matrix_to_vec,
    nearest_unitary,
    orthonormal_complement,
    min_eigenvalue,
    partial_trace_B,
    schur,
    singular_values,
    svd,
    unvec,
    vec,
    vec_to_matrix,
)
from tests.helpers import random_matrix
from utils.errors import DimensionError, PreconditionError

dims = st.integers(min_value=1, max_value=4)
seeds = st.integers(min_value=0, max_value=2**32 - 1)


def test_row_major_correspondence():
    x = np.arange(6, dtype=complex)
    X = vec_to_matrix(x, 2, 3)
    for i in range(2):
        for j in range(3):
            assert X[i, j] == x[i * 3 + j]
    np.testing.assert_array_equal(matrix_to_vec(X), x)


def test_vec_to_matrix_rejects_wrong_length():
    with pytest.raises(DimensionError):
        vec_to_matrix(np.ones(5), 2, 3)


@given(m=dims, n=dims, seed=seeds)
@settings(max_examples=200, deadline=None)
def test_local_operator_acts_as_F_X_Gt(m, n, seed):
    rng = np.random.default_rng(seed)
    X = random_matrix(m, n, rng)
    F = random_matrix(m, m, rng)
    G = random_matrix(n, n, rng)
    lhs = kron(F, G) @ matrix_to_vec(X)
    np.testing.assert_allclose(lhs, matrix_to_vec(F @ X @ G.T), atol=1e-12)


@given(m=dims, n=dims, seed=seeds)
@settings(max_examples=200, deadline=None)
def test_column_stacking_identity(m, n, seed):
    rng = np.random.default_rng(seed)
    A = random_matrix(m, m, rng)
    X = random_matrix(m, n, rng)
    B = random_matrix(n, n, rng)
    np.testing.assert_allclose(vec(A @ X @ B), kron(B.T, A) @ vec(X), atol=1e-12)
    np.testing.assert_allclose(unvec(vec(X), m, n), X)


@given(m=dims, n=dims, seed=seeds)
@settings(max_examples=100, deadline=None)
def test_kron_mixed_product(m, n, seed):
    rng = np.random.default_rng(seed)
    A, C = random_matrix(m, m, rng), random_matrix(m, m, rng)
    B, D = random_matrix(n, n, rng), random_matrix(n, n, rng)
    np.testing.assert_allclose(kron(A, B) @ kron(C, D), kron(A @ C, B @ D), atol=1e-12)


def _hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    A = random_matrix(dim, dim, rng)
    return A + A.conj().T


@pytest.mark.parametrize("seed", range(10))
def test_kron_eigenvalues_are_products(seed):
    rng = np.random.default_rng(seed)
    A, B = _hermitian(3, rng), _hermitian(2, rng)
    products = np.sort(np.outer(np.linalg.eigvalsh(A), np.linalg.eigvalsh(B)).ravel())
    np.testing.assert_allclose(np.linalg.eigvalsh(kron(A, B)), products, atol=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_schur_product_of_psd_is_psd(seed):
    rng = np.random.default_rng(seed)
    A, B = random_matrix(4, 4, rng), random_matrix(4, 4, rng)
    P = schur(A @ A.conj().T, B @ B.conj().T)
    assert min_eigenvalue(P) >= -1e-12
    np.testing.assert_allclose(P, P.conj().T, atol=1e-13)
    with pytest.raises(DimensionError):
        schur(np.eye(2), np.eye(3))


@pytest.mark.parametrize("m, n", [(2, 3), (3, 2), (4, 4), (1, 3)])
def test_partial_trace_spectrum_is_squared_singular_values(rng, m, n):
    X = random_matrix(m, n, rng)
    rho = partial_trace_B(matrix_to_vec(X), m, n)
    expected = np.zeros(m)
    s = singular_values(X)
    expected[:s.size] = s ** 2
    np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(rho))[::-1], expected, atol=1e-12)
    assert np.trace(rho).real == pytest.approx(1.0)


def test_svd_truncates_to_numerical_rank(rng):
    a = random_matrix(4, 1, rng)
    b = random_matrix(1, 3, rng)
    X = a @ b + 1e-14 * random_matrix(4, 3, rng)
    A, s, B = svd(X, Tolerance())
    assert s.size == 1
    assert A.shape == (4, 1) and B.shape == (3, 1)
    np.testing.assert_allclose(A @ np.diag(s) @ B.conj().T, X, atol=1e-12)


def test_svd_values_descending_and_positive(rng):
    _, s, _ = svd(random_matrix(5, 3, rng))
    assert np.all(s > 0)
    assert np.all(np.diff(s) <= 0)


def test_partial_trace_is_X_Xh(rng):
    X = random_matrix(2, 3, rng)
    np.testing.assert_allclose(partial_trace_B(matrix_to_vec(X), 2, 3), X @ X.conj().T)
    with pytest.raises(DimensionError):
        partial_trace_B(matrix_to_vec(X))


def test_complete_unitary_rows_keeps_given_rows():
    e = np.eye(4)
    rows = [e[0], None, e[3], None]
    U = complete_unitary_rows(rows)
    assert is_unitary(U)
    np.testing.assert_array_equal(U[0], e[0])
    np.testing.assert_array_equal(U[2], e[3])
    # Stars take the first free basis vectors in index order
    np.testing.assert_allclose(U[1], e[1])
    np.testing.assert_allclose(U[3], e[2])


def test_complete_unitary_rows_rejects_bad_row_length():
    with pytest.raises(DimensionError):
        complete_unitary_rows([np.ones(3), None])


def test_haar_and_nearest_unitary(rng):
    assert is_unitary(haar_unitary(5, rng))
    W = nearest_unitary(random_matrix(4, 4, rng))
    assert is_unitary(W)


def test_orthonormal_complement_spans_the_rest(rng):
    A, _, _ = svd(random_matrix(5, 2, rng))
    C = orthonormal_complement(A)
    assert C.shape == (5, 3)
    np.testing.assert_allclose(A.conj().T @ C, 0, atol=1e-12)
    assert is_unitary(np.hstack([A, C]))


def test_tolerance_matches_and_validation():
    tol = Tolerance(abs_eps=1e-9, rel_eps=1e-6)
    assert tol.matches(1.0, 1.0 + 5e-7)
    assert not tol.matches(1.0, 1.0 + 1e-5)
    assert tol.is_zero(1e-10)
    with pytest.raises(PreconditionError):
        Tolerance(abs_eps=-1.0)


def test_kron_needs_a_factor():
    with pytest.raises(DimensionError):
        kron()
