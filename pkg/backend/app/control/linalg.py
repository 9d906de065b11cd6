"""
==============================================================================
DDSYNTH - DENSE LINEAR ALGEBRA KERNELS
==============================================================================

Small dense real-matrix kernels shared by the whole engine:
- Orthonormal kernels / images with a relative singular-value cutoff
- Reduced row echelon form (partial pivoting, zero rows dropped)
- Kronecker / column-stacking calculus
- Lyapunov solves by Kronecker linearization
- Matrix exponential and spectral abscissa

Author: DDSynth Team
==============================================================================
"""

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg

from app.control.errors import NonFiniteMatrix, SingularLyapunov


@dataclass(frozen=True)
class Tolerance:
    """Numerical tolerances used across the engine."""
    rank_tol: float = 1e-9
    residual_tol: float = 1e-8
    psd_tol: float = 1e-8

    def __post_init__(self):
        for name in ("rank_tol", "residual_tol", "psd_tol"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ValueError(f"{name} must be strictly positive, got {value}")


DEFAULT_TOL = Tolerance()


# =============================================================================
# CONSTRUCTION HELPERS
# =============================================================================

def as_matrix(M, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-D float array (1-D input becomes a column)."""
    arr = np.array(M, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    elif arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteMatrix(f"{name} has non-finite entries")
    return arr


def sym(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def min_eig(M: np.ndarray) -> float:
    """Smallest eigenvalue of the symmetric part of M."""
    if M.size == 0:
        return np.inf
    return float(np.linalg.eigvalsh(sym(M)).min())


def max_eig(M: np.ndarray) -> float:
    """Largest eigenvalue of the symmetric part of M."""
    if M.size == 0:
        return -np.inf
    return float(np.linalg.eigvalsh(sym(M)).max())


# =============================================================================
# SUBSPACES
# =============================================================================

def _cutoff(s: np.ndarray, tol: Tolerance, scale: Optional[float]) -> float:
    reference = s[0] if scale is None else max(scale, s[0] if s.size else 0.0)
    return tol.rank_tol * reference


def kernel_basis(M: np.ndarray, tol: Tolerance = DEFAULT_TOL,
                 scale: Optional[float] = None) -> np.ndarray:
    """
    Orthonormal basis of ker(M).

    Singular values at or below rank_tol * sigma_max count as zero. Passing
    ``scale`` makes the cutoff rank_tol * max(scale, sigma_max), for matrices
    that are themselves round-off of a larger computation.
    Returns an (n x 0) array when M has full column rank.
    """
    M = np.asarray(M, dtype=float)
    rows, cols = M.shape
    if cols == 0:
        return np.zeros((0, 0))
    if rows == 0 or not np.any(M):
        return np.eye(cols)
    _, s, vh = scipy.linalg.svd(M, full_matrices=True)
    rank = int(np.sum(s > _cutoff(s, tol, scale)))
    return vh[rank:].T.copy()


def image_basis(M: np.ndarray, tol: Tolerance = DEFAULT_TOL,
                scale: Optional[float] = None) -> np.ndarray:
    """Orthonormal basis of the column space of M."""
    M = np.asarray(M, dtype=float)
    rows, cols = M.shape
    if cols == 0 or rows == 0 or not np.any(M):
        return np.zeros((rows, 0))
    u, s, _ = scipy.linalg.svd(M, full_matrices=False)
    rank = int(np.sum(s > _cutoff(s, tol, scale)))
    return u[:, :rank].copy()


def numerical_rank(M: np.ndarray, tol: Tolerance = DEFAULT_TOL) -> int:
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > tol.rank_tol * s[0]))


def projector(basis: np.ndarray) -> np.ndarray:
    """Orthogonal projector onto the span of an orthonormal basis."""
    return basis @ basis.T


def krylov_basis(A: np.ndarray, B: np.ndarray, tol: float = 1e-9,
                 scale: Optional[float] = None) -> np.ndarray:
    """
    Orthonormal basis of the smallest A-invariant subspace containing im B.

    Expands span(B) by A-images until the pivoted-QR rank stops growing.
    ``scale`` sets an absolute reference for the rank cutoff, so that a B made
    only of round-off yields an empty basis.
    """
    n = A.shape[0]
    if B.size == 0 or not np.any(B):
        return np.zeros((n, 0))
    Q, R, _ = scipy.linalg.qr(B, mode="economic", pivoting=True)
    scale = max(abs(R[0, 0]), scale or 0.0)
    rank = int(np.sum(np.abs(np.diag(R)) > tol * scale))
    if rank == 0:
        return np.zeros((n, 0))
    U = Q[:, :rank]
    while rank < n:
        Q, R, _ = scipy.linalg.qr(np.hstack((U, A @ U)), mode="economic", pivoting=True)
        new_rank = int(np.sum(np.abs(np.diag(R)) > tol * max(scale, abs(R[0, 0]))))
        if new_rank <= rank:
            break
        U = Q[:, :new_rank]
        rank = new_rank
    return U


# =============================================================================
# REDUCED ROW ECHELON FORM
# =============================================================================

def rre(M: np.ndarray, tol: Tolerance = DEFAULT_TOL) -> Tuple[np.ndarray, List[int]]:
    """
    Reduced row echelon form with partial pivoting.

    Pivots with magnitude at or below rank_tol * ||M||_2 are treated as zero;
    the resulting zero rows are dropped, so the returned rows are independent
    and span the row space of M.

    Returns:
        (R, pivots): R has one row per pivot, pivots are column indices.
    """
    R = np.array(M, dtype=float)
    rows, cols = R.shape
    if R.size == 0:
        return np.zeros((0, cols)), []
    cutoff = tol.rank_tol * np.linalg.norm(R, 2)
    if cutoff == 0.0:
        return np.zeros((0, cols)), []

    pivots: List[int] = []
    r = 0
    for c in range(cols):
        if r >= rows:
            break
        p = r + int(np.argmax(np.abs(R[r:, c])))
        if abs(R[p, c]) <= cutoff:
            R[r:, c] = 0.0
            continue
        if p != r:
            R[[r, p]] = R[[p, r]]
        R[r] /= R[r, c]
        others = np.arange(rows) != r
        R[others] -= np.outer(R[others, c], R[r])
        R[others, c] = 0.0
        pivots.append(c)
        r += 1
    return R[:r], pivots


# =============================================================================
# KRONECKER / VEC CALCULUS
# =============================================================================

def kron(Y1: np.ndarray, Y2: np.ndarray) -> np.ndarray:
    return np.kron(Y1, Y2)


def vec(M: np.ndarray) -> np.ndarray:
    """Stack the columns of M left to right into a column vector."""
    M = np.asarray(M, dtype=float)
    return M.reshape(-1, 1, order="F")


def unvec(v: np.ndarray, rows: int, cols: int) -> np.ndarray:
    return np.asarray(v, dtype=float).reshape(rows, cols, order="F")


# =============================================================================
# LYAPUNOV / EXPONENTIAL / SPECTRUM
# =============================================================================

def lyapunov_solve(Acl: np.ndarray, Q: np.ndarray, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """
    Solve Acl^T W + W Acl = -Q for symmetric W.

    Uses the Kronecker form ((I kron Acl^T) + (Acl^T kron I)) vec(W) = -vec(Q).

    Raises:
        SingularLyapunov: the Kronecker operator is rank deficient at rank_tol
    """
    Acl = np.asarray(Acl, dtype=float)
    Q = np.asarray(Q, dtype=float)
    n = Acl.shape[0]
    if Acl.shape != (n, n) or Q.shape != (n, n):
        raise ValueError(f"lyapunov_solve needs square conformable inputs, got {Acl.shape} and {Q.shape}")

    eye = np.eye(n)
    K = np.kron(eye, Acl.T) + np.kron(Acl.T, eye)
    s = np.linalg.svd(K, compute_uv=False)
    if s[0] == 0.0 or s[-1] <= tol.rank_tol * s[0]:
        raise SingularLyapunov(
            f"Lyapunov operator is singular (sigma_min/sigma_max = {s[-1] / max(s[0], 1e-300):.2e})"
        )
    w = np.linalg.solve(K, -vec(Q))
    return sym(unvec(w, n, n))


def expm(M: np.ndarray) -> np.ndarray:
    return scipy.linalg.expm(np.asarray(M, dtype=float))


def spectral_abscissa(M: np.ndarray) -> float:
    """Largest real part over the eigenvalues of M."""
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return -np.inf
    return float(np.max(np.linalg.eigvals(M).real))


def is_hurwitz(M: np.ndarray, margin: float = 1e-10) -> bool:
    return spectral_abscissa(M) < -margin
