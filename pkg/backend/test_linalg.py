"""
Tests for the dense linear algebra kernels
"""
import numpy as np
import pytest

from app.control.errors import NonFiniteMatrix, SingularLyapunov
from app.control.linalg import (
    Tolerance,
    as_matrix,
    expm,
    image_basis,
    is_hurwitz,
    kernel_basis,
    kron,
    krylov_basis,
    lyapunov_solve,
    numerical_rank,
    rre,
    spectral_abscissa,
    unvec,
    vec,
)


# =============================================================================
# SUBSPACES
# =============================================================================

def test_kernel_basis_is_orthonormal_nullspace():
    M = np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    K = kernel_basis(M)
    assert K.shape == (3, 1)
    assert np.allclose(M @ K, 0.0, atol=1e-12)
    assert np.allclose(K.T @ K, np.eye(1))


def test_kernel_of_full_column_rank_is_empty():
    assert kernel_basis(np.eye(3)).shape == (3, 0)


def test_kernel_of_zero_matrix_is_everything():
    assert np.allclose(kernel_basis(np.zeros((2, 3))), np.eye(3))


def test_image_basis_rank_one():
    M = np.outer([1.0, 2.0, 3.0], [1.0, -1.0])
    U = image_basis(M)
    assert U.shape == (3, 1)
    assert np.allclose(U @ (U.T @ M), M)


def test_numerical_rank_ignores_roundoff():
    M = np.diag([1.0, 1e-3, 1e-14])
    assert numerical_rank(M) == 2


def test_krylov_basis_grows_to_reachable_space():
    A = np.diag([1.0, 2.0, 3.0])
    assert krylov_basis(A, np.array([[1.0], [0.0], [0.0]])).shape == (3, 1)
    assert krylov_basis(A, np.ones((3, 1))).shape == (3, 3)
    assert krylov_basis(A, np.zeros((3, 1))).shape == (3, 0)


# =============================================================================
# ROW ECHELON FORM
# =============================================================================

def test_rre_drops_dependent_rows():
    M = np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [1.0, 0.0, 1.0]])
    R, pivots = rre(M)
    assert pivots == [0, 1]
    assert np.allclose(R, [[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])


def test_rre_of_zero_matrix():
    R, pivots = rre(np.zeros((2, 4)))
    assert R.shape == (0, 4)
    assert pivots == []


# =============================================================================
# KRONECKER / VEC
# =============================================================================

def test_vec_stacks_columns():
    M = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert vec(M).ravel().tolist() == [1.0, 3.0, 2.0, 4.0]
    assert np.array_equal(unvec(vec(M), 2, 2), M)


def test_vec_of_product_identity(rng):
    A = rng.standard_normal((3, 2))
    X = rng.standard_normal((2, 4))
    B = rng.standard_normal((4, 5))
    assert np.allclose(vec(A @ X @ B), kron(B.T, A) @ vec(X))


# =============================================================================
# LYAPUNOV / SPECTRUM
# =============================================================================

def test_lyapunov_solve_stable():
    A = np.array([[-1.0, 2.0], [0.0, -3.0]])
    Q = np.eye(2)
    W = lyapunov_solve(A, Q)
    assert np.allclose(A.T @ W + W @ A, -Q)
    assert np.allclose(W, W.T)


def test_lyapunov_solve_scalar():
    assert np.allclose(lyapunov_solve(-np.eye(2), np.eye(2)), 0.5 * np.eye(2))


@pytest.mark.parametrize("A", [np.zeros((2, 2)), np.diag([1.0, -1.0])])
def test_lyapunov_solve_singular(A):
    with pytest.raises(SingularLyapunov):
        lyapunov_solve(A, np.eye(2))


def test_expm_of_zero_is_identity():
    assert np.array_equal(expm(np.zeros((3, 3))), np.eye(3))


def test_expm_of_diagonal_and_nilpotent():
    assert np.allclose(expm(np.diag([0.0, 1.0, -2.0])), np.diag(np.exp([0.0, 1.0, -2.0])))
    assert np.allclose(expm(np.array([[0.0, 1.0], [0.0, 0.0]])), [[1.0, 1.0], [0.0, 1.0]])
    rotation = expm(np.array([[0.0, -np.pi / 2], [np.pi / 2, 0.0]]))
    assert np.allclose(rotation, [[0.0, -1.0], [1.0, 0.0]], atol=1e-12)


def test_expm_semigroup(rng):
    for _ in range(20):
        A = rng.standard_normal((4, 4))
        s, t = rng.uniform(0.0, 1.0, size=2)
        assert np.allclose(expm(A * (s + t)), expm(A * s) @ expm(A * t), rtol=1e-9, atol=1e-10)


def test_spectral_abscissa_and_hurwitz():
    A = np.array([[0.0, 1.0], [-1.0, -1.0]])
    assert spectral_abscissa(A) == pytest.approx(-0.5)
    assert is_hurwitz(A)
    assert not is_hurwitz(np.zeros((2, 2)))


# =============================================================================
# VALIDATION
# =============================================================================

def test_tolerance_must_be_positive():
    with pytest.raises(ValueError):
        Tolerance(rank_tol=0.0)


def test_as_matrix_rejects_nan():
    with pytest.raises(NonFiniteMatrix):
        as_matrix([[1.0, np.nan]])


def test_as_matrix_turns_vector_into_column():
    assert as_matrix([1.0, 2.0]).shape == (2, 1)
