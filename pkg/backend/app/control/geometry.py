"""
==============================================================================
DDSYNTH - GEOMETRIC DISTURBANCE DECOUPLING
==============================================================================

Subspace machinery for disturbance decoupling by state feedback:

1. Largest controlled-invariant subspace inside ker H (fixed-point iteration)
2. DD feasibility test  im E <= im V <= ker H
3. The DD matrix equation  V X - B F V = A V  in Kronecker form, reduced by
   row echelon elimination, with a minimum-norm particular solution and a
   nullspace parameterization of every DD controller
4. f_dd residual metric and constraint-qualification preflight

Author: DDSynth Team
==============================================================================
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, List, Tuple

import numpy as np
import scipy.linalg

from app.control.errors import Infeasible, PreconditionViolation
from app.control.linalg import (
    DEFAULT_TOL,
    Tolerance,
    image_basis,
    kernel_basis,
    kron,
    numerical_rank,
    projector,
    rre,
    unvec,
    vec,
)

if TYPE_CHECKING:
    from app.models import LtiSystem

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Subspace:
    """Subspace of R^n given by an orthonormal basis (n x k)."""
    basis: np.ndarray

    def __post_init__(self):
        basis = np.asarray(self.basis, dtype=float)
        if basis.ndim != 2:
            raise ValueError("subspace basis must be 2-D")
        object.__setattr__(self, "basis", basis)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def ambient(self) -> int:
        return self.basis.shape[0]

    @classmethod
    def span(cls, M: np.ndarray, tol: Tolerance = DEFAULT_TOL) -> "Subspace":
        """Orthonormalize the columns of M."""
        return cls(image_basis(np.asarray(M, dtype=float), tol))

    def is_orthonormal(self, tol: Tolerance = DEFAULT_TOL) -> bool:
        gram = self.basis.T @ self.basis
        return bool(np.linalg.norm(gram - np.eye(self.dim)) <= tol.residual_tol)


@dataclass(frozen=True, eq=False)
class DdSolution:
    """A solution (F, X) of V X - B F V = A V."""
    F: np.ndarray
    X: np.ndarray
    residual: float


@dataclass(frozen=True, eq=False)
class DdParameterization:
    """
    Affine set of all (X, F) solving the reduced DD equation.

    y = (vec X; vec F) = particular + nullspace @ theta
    """
    particular: np.ndarray
    nullspace: np.ndarray
    constraint_matrix: np.ndarray
    rhs: np.ndarray
    k: int
    m: int
    n: int

    @property
    def n_free(self) -> int:
        return self.nullspace.shape[1]

    def point(self, theta: np.ndarray = None) -> np.ndarray:
        if theta is None or self.n_free == 0:
            return self.particular.copy()
        return self.particular + self.nullspace @ np.asarray(theta, dtype=float).ravel()

    def split(self, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Unstack y into (X, F)."""
        y = np.asarray(y, dtype=float).ravel()
        kk = self.k * self.k
        X = unvec(y[:kk], self.k, self.k)
        F = unvec(y[kk:], self.m, self.n)
        return X, F

    def stack(self, X: np.ndarray, F: np.ndarray) -> np.ndarray:
        return np.concatenate((vec(X).ravel(), vec(F).ravel()))

    def project(self, X: np.ndarray, F: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Euclidean projection of (X, F) onto the affine DD set."""
        y = self.stack(X, F)
        if self.n_free == 0:
            return self.split(self.particular)
        theta = self.nullspace.T @ (y - self.particular)
        return self.split(self.point(theta))

    def constraint_residual(self, y: np.ndarray) -> float:
        y = np.asarray(y, dtype=float).ravel()
        if self.constraint_matrix.shape[0] == 0:
            return 0.0
        return float(np.linalg.norm(self.constraint_matrix @ y - self.rhs))


@dataclass(frozen=True)
class RcqReport:
    """Constraint-qualification preflight for the unified program."""
    full_column_rank: bool
    spans_state_space: bool
    use_rre_fallback: bool


# =============================================================================
# CONTROLLED-INVARIANT SUBSPACE
# =============================================================================

def _system_scale(sys: LtiSystem) -> float:
    return max(np.linalg.norm(sys.A, 2), np.linalg.norm(sys.B, 2), np.linalg.norm(sys.H, 2), 1.0)


def ci_subspace_sequence(sys: LtiSystem, tol: Tolerance = DEFAULT_TOL) -> List[Subspace]:
    """
    Iterates W_0 = ker H, W_{j+1} = ker H  intersect  A^-1(W_j + im B).

    The preimage is ker((I - P_S) A) with P_S the projector on S = W_j + im B,
    so no inverse of A is formed. Stops once the dimension stalls.
    """
    n = sys.n
    scale = _system_scale(sys)
    eye = np.eye(n)
    W = kernel_basis(sys.H, tol)
    sequence = [Subspace(W)]
    for _ in range(n + 1):
        if W.shape[1] == 0:
            break
        S = image_basis(np.hstack((W, sys.B)), tol)
        residual_map = (eye - projector(S)) @ sys.A
        W_next = kernel_basis(np.vstack((sys.H, residual_map)), tol, scale=scale)
        logger.debug("controlled-invariant iteration: dim %d -> %d", W.shape[1], W_next.shape[1])
        if W_next.shape[1] >= W.shape[1]:
            break
        W = W_next
        sequence.append(Subspace(W))
    return sequence


def largest_ci_subspace(sys: LtiSystem, tol: Tolerance = DEFAULT_TOL) -> Subspace:
    """V* = largest W inside ker H with A W <= W + im B."""
    V = ci_subspace_sequence(sys, tol)[-1]
    logger.info("largest controlled-invariant subspace in ker H has dimension %d", V.dim)
    return V


# =============================================================================
# FEASIBILITY AND THE DD EQUATION
# =============================================================================

def dd_feasible(sys: LtiSystem, V: Subspace, tol: Tolerance = DEFAULT_TOL) -> bool:
    """True iff im E <= im V and H V = 0 (within residual_tol)."""
    basis = V.basis
    if V.dim == 0:
        return bool(np.linalg.norm(sys.E) <= tol.residual_tol)
    outside = sys.E - basis @ (basis.T @ sys.E)
    e_in_v = np.linalg.norm(outside, 2) <= tol.residual_tol * max(1.0, np.linalg.norm(sys.E, 2))
    v_in_ker = np.linalg.norm(sys.H @ basis, 2) <= tol.residual_tol * max(1.0, np.linalg.norm(sys.H, 2))
    return bool(e_in_v and v_in_ker)


def dd_matrices(sys: LtiSystem, V: Subspace) -> Tuple[np.ndarray, np.ndarray]:
    """C = [I_k kron V, V^T kron (-B)] and b = vec(A V), before reduction."""
    k = V.dim
    C = np.hstack((kron(np.eye(k), V.basis), kron(V.basis.T, -sys.B)))
    b = vec(sys.A @ V.basis).ravel()
    return C, b


def assemble_dd_system(sys: LtiSystem, V: Subspace, tol: Tolerance = DEFAULT_TOL) -> DdParameterization:
    """
    Reduce [C | b] to row echelon form and parameterize its solution set.

    Raises:
        PreconditionViolation: V is zero-dimensional
        Infeasible: the reduced system contains a row 0 = nonzero
    """
    if V.dim == 0:
        raise PreconditionViolation("DD system needs a nonzero subspace V")
    C, b = dd_matrices(sys, V)
    n_vars = C.shape[1]
    reduced, pivots = rre(np.hstack((C, b[:, None])), tol)
    if n_vars in pivots:
        raise Infeasible("V X - B F V = A V has no solution for this V")

    C_rd = reduced[:, :n_vars]
    b_rd = reduced[:, n_vars]
    if C_rd.shape[0] == 0:
        particular = np.zeros(n_vars)
    else:
        particular = scipy.linalg.lstsq(C_rd, b_rd)[0]
    nullspace = kernel_basis(C_rd, tol) if C_rd.shape[0] else np.eye(n_vars)
    logger.debug("DD system: %d reduced rows, %d free directions", C_rd.shape[0], nullspace.shape[1])
    return DdParameterization(
        particular=particular,
        nullspace=nullspace,
        constraint_matrix=C_rd,
        rhs=b_rd,
        k=V.dim,
        m=sys.m,
        n=sys.n,
    )


def dd_equation_residual(sys: LtiSystem, V: Subspace, X: np.ndarray, F: np.ndarray) -> float:
    """||V X - B F V - A V||_F."""
    basis = V.basis
    return float(np.linalg.norm(basis @ X - sys.B @ F @ basis - sys.A @ basis, "fro"))


def solve_dd(sys: LtiSystem, V: Subspace, tol: Tolerance = DEFAULT_TOL) -> DdSolution:
    """Minimum-norm DD controller (no stability requirement)."""
    param = assemble_dd_system(sys, V, tol)
    X, F = param.split(param.particular)
    return DdSolution(F=F, X=X, residual=dd_equation_residual(sys, V, X, F))


def dd_residual(sys: LtiSystem, V: Subspace, F: np.ndarray) -> float:
    """
    f_dd = min_X ||V X - (A + B F) V||_2.

    With an orthonormal V the minimizer is X = V^T A_F V.
    """
    if V.dim == 0:
        return 0.0
    basis = V.basis
    AFV = (sys.A + sys.B @ np.asarray(F, dtype=float)) @ basis
    return float(np.linalg.norm(AFV - basis @ (basis.T @ AFV), 2))


def least_squares_x(sys: LtiSystem, V: Subspace, F: np.ndarray) -> np.ndarray:
    basis = V.basis
    return basis.T @ (sys.A + sys.B @ F) @ basis


def check_rcq(sys: LtiSystem, V: Subspace, tol: Tolerance = DEFAULT_TOL) -> RcqReport:
    """Full column rank of V and im V + im B = R^n."""
    full_column_rank = numerical_rank(V.basis, tol) == V.dim
    spans = numerical_rank(np.hstack((V.basis, sys.B)), tol) == sys.n
    report = RcqReport(
        full_column_rank=full_column_rank,
        spans_state_space=spans,
        use_rre_fallback=not spans,
    )
    if report.use_rre_fallback:
        logger.info("im V + im B does not span R^%d; using row-echelon reduced DD constraints", sys.n)
    return report
