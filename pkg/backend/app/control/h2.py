"""
==============================================================================
DDSYNTH - H2 ANALYSIS AND SDP SYNTHESIS
==============================================================================

- Observability / controllability Gramians of the closed loop
- Squared H2 norm Tr(E^T W_o E), with a truncated time-domain diagnostic for
  closed loops that are not Hurwitz
- Impulse response g(t) = H exp(A_F t) E
- The state-feedback H2 semidefinite program and gain extraction F = N P^-1

Author: DDSynth Team
==============================================================================
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import TYPE_CHECKING, List, Optional, Sequence, Tuple

import cvxpy as cp
import numpy as np

from app.control.conic import BackendConfig, ConicProgram, ConicSolution, ConicStatus, solve_conic
from app.control.errors import IllConditionedP, Infeasible, NumericalFailure, SingularLyapunov
from app.control.linalg import (
    DEFAULT_TOL,
    Tolerance,
    expm,
    krylov_basis,
    lyapunov_solve,
    min_eig,
    spectral_abscissa,
)

if TYPE_CHECKING:
    from app.models import LtiSystem

logger = logging.getLogger(__name__)

HURWITZ_MARGIN = 1e-10
DEFAULT_SDP_EPS = 1e-4
DEFAULT_SDP_DELTA = 1e-6
ILL_CONDITIONED = 1e12


@dataclass(frozen=True, eq=False)
class H2Report:
    """
    h2_sq is Tr(E^T W_o E) when hurwitz, otherwise the truncated integral of
    ||g(t)||_F^2 over [0, horizon] (gramian is then None).
    """
    h2_sq: float
    gramian: Optional[np.ndarray]
    hurwitz: bool


# =============================================================================
# GRAMIANS
# =============================================================================

def observability_gramian(Acl: np.ndarray, H: np.ndarray, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """W_o with Acl^T W_o + W_o Acl = -H^T H."""
    return lyapunov_solve(Acl, H.T @ H, tol)


def controllability_gramian(Acl: np.ndarray, E: np.ndarray, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """W_c with Acl W_c + W_c Acl^T = -E E^T."""
    return lyapunov_solve(Acl.T, E @ E.T, tol)


def hankel_singular_values(Acl: np.ndarray, E: np.ndarray, H: np.ndarray,
                           tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """sqrt(eig(W_c W_o)) in decreasing order."""
    Wc = controllability_gramian(Acl, E, tol)
    Wo = observability_gramian(Acl, H, tol)
    eigs = np.linalg.eigvals(Wc @ Wo).real
    return np.sort(np.sqrt(np.clip(eigs, 0.0, None)))[::-1]


# =============================================================================
# H2 NORM
# =============================================================================

def _minimal_channel(Acl: np.ndarray, E: np.ndarray, H: np.ndarray,
                     tol: Tolerance) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Restrict (Acl, E, H) to the part reachable from E and observable through H."""
    n = Acl.shape[0]
    Uc = krylov_basis(Acl, E, tol.rank_tol)
    if Uc.shape[1] == 0:
        return np.zeros((0, 0)), np.zeros((0, E.shape[1])), np.zeros((H.shape[0], 0))
    Ac, Ec, Hc = Uc.T @ Acl @ Uc, Uc.T @ E, H @ Uc
    h_scale = float(np.linalg.norm(H, 2)) if H.size else 0.0
    Uo = krylov_basis(Ac.T, Hc.T, tol.rank_tol, scale=h_scale)
    if Uo.shape[1] == 0 or n == 0:
        return np.zeros((0, 0)), np.zeros((0, E.shape[1])), np.zeros((H.shape[0], 0))
    return Uo.T @ Ac @ Uo, Uo.T @ Ec, Hc @ Uo


def _weighted_power_sum(Phi: np.ndarray, Q: np.ndarray, count: int) -> np.ndarray:
    """sum_{k=0}^{count-1} (Phi^k)^T Q Phi^k by binary doubling."""
    total = np.zeros_like(Q)
    offset_power = np.eye(Phi.shape[0])
    block_sum, block_power = Q.copy(), Phi.copy()
    while count:
        if count & 1:
            total = total + offset_power.T @ block_sum @ offset_power
            offset_power = offset_power @ block_power
        count >>= 1
        if count:
            block_sum = block_sum + block_power.T @ block_sum @ block_power
            block_power = block_power @ block_power
    return total


def truncated_h2_integral(sys: LtiSystem, F: np.ndarray, horizon: float = 50.0, dt: float = 1e-3,
                          tol: Tolerance = DEFAULT_TOL) -> float:
    """
    Trapezoid-rule value of the integral of ||H exp(A_F t) E||_F^2 over [0, horizon].

    Evaluated on the minimal realization of the disturbance channel, so modes
    that E cannot reach or H cannot see do not enter. Returns inf on overflow.
    """
    Acl = sys.A + sys.B @ np.asarray(F, dtype=float)
    Am, Em, Hm = _minimal_channel(Acl, sys.E, sys.H, tol)
    if Am.shape[0] == 0:
        return 0.0
    steps = max(1, int(round(horizon / dt)))
    step = horizon / steps
    Phi = expm(Am * step)
    Q = Hm.T @ Hm
    with np.errstate(over="ignore", invalid="ignore"):
        summed = _weighted_power_sum(Phi, Q, steps + 1)
        last = np.linalg.matrix_power(Phi, steps)
        first_term = float(np.trace(Em.T @ Q @ Em))
        last_term = float(np.trace(Em.T @ last.T @ Q @ last @ Em))
        value = step * (float(np.trace(Em.T @ summed @ Em)) - 0.5 * (first_term + last_term))
    if not np.isfinite(value):
        return float("inf")
    return max(value, 0.0)


def h2_norm_sq(sys: LtiSystem, F: np.ndarray, tol: Tolerance = DEFAULT_TOL,
               horizon: float = 50.0, dt: float = 1e-3) -> H2Report:
    """
    Squared H2 norm of the disturbance-to-output channel under u = F x.

    Non-Hurwitz loops are reported with hurwitz=False and the truncated
    time-domain diagnostic; nothing is raised.
    """
    F = sys.gain(F)
    Acl = sys.A + sys.B @ F
    if spectral_abscissa(Acl) < -HURWITZ_MARGIN:
        try:
            W = observability_gramian(Acl, sys.H, tol)
            return H2Report(h2_sq=float(np.trace(sys.E.T @ W @ sys.E)), gramian=W, hurwitz=True)
        except SingularLyapunov:
            logger.warning("observability Gramian is singular; reporting the truncated integral")
    return H2Report(
        h2_sq=truncated_h2_integral(sys, F, horizon, dt, tol),
        gramian=None,
        hurwitz=False,
    )


def impulse_response(sys: LtiSystem, F: np.ndarray, tgrid: Sequence[float]) -> List[np.ndarray]:
    """g(t) = H exp((A + B F) t) E for each t."""
    Acl = sys.A + sys.B @ np.asarray(F, dtype=float)
    return [sys.H @ expm(Acl * float(t)) @ sys.E for t in tgrid]


# =============================================================================
# SDP SYNTHESIS
# =============================================================================

def build_h2_sdp(sys: LtiSystem, eps: float = DEFAULT_SDP_EPS,
                 delta: float = DEFAULT_SDP_DELTA) -> ConicProgram:
    """
    min Tr(W) over (G, N, P, W) subject to

        [ G          P H^T  sqrt(eps) P ]
        [ H P        I_p    0           ]  >= 0,     [ W  E^T ]  >= 0,     P >= delta I,
        [ sqrt(eps) P  0    I_n         ]            [ E  P   ]

        G = -(B N + A P)^T - (B N + A P).
    """
    if eps <= 0 or delta <= 0:
        raise ValueError("eps and delta must be positive")
    n, m, p, l = sys.n, sys.m, sys.p, sys.l
    A, B, E, H = sys.A, sys.B, sys.E, sys.H

    root = np.sqrt(eps)
    G = cp.Variable((n, n), symmetric=True, name="G")
    N = cp.Variable((m, n), name="N")
    P = cp.Variable((n, n), symmetric=True, name="P")
    W = cp.Variable((l, l), symmetric=True, name="W")

    lyapunov_block = cp.bmat([
        [G, P @ H.T, root * P],
        [H @ P, np.eye(p), np.zeros((p, n))],
        [root * P, np.zeros((n, p)), np.eye(n)],
    ])
    trace_block = cp.bmat([[W, E.T], [E, P]])
    closed = B @ N + A @ P

    return ConicProgram(
        variables={"G": G, "N": N, "P": P, "W": W},
        objective=cp.trace(W),
        equalities=[("lyapunov", G + closed.T + closed)],
        psd_blocks=[
            ("lyapunov", lyapunov_block),
            ("trace", trace_block),
            ("strictness", P - delta * np.eye(n)),
        ],
    )


def extract_h2_controller(sol: ConicSolution, delta: float = DEFAULT_SDP_DELTA) -> np.ndarray:
    """
    F = N P^-1.

    Warns IllConditionedP when cond(P) > 1e12; still returns the gain.
    """
    if sol.status != ConicStatus.OPTIMAL:
        raise NumericalFailure(f"cannot extract a gain from a {sol.status.value} solution")
    P = np.asarray(sol.values["P"], dtype=float)
    N = np.atleast_2d(np.asarray(sol.values["N"], dtype=float))
    P = 0.5 * (P + P.T)
    if min_eig(P) < delta / 2:
        raise NumericalFailure(f"P is not positive definite (min eig {min_eig(P):.2e})")
    condition = np.linalg.cond(P)
    if condition > ILL_CONDITIONED:
        warnings.warn(f"P is ill-conditioned (cond {condition:.2e})", IllConditionedP, stacklevel=2)
    return np.linalg.solve(P, N.T).T


def synthesize_h2(sys: LtiSystem, eps: float = DEFAULT_SDP_EPS, delta: float = DEFAULT_SDP_DELTA,
                  config: Optional[BackendConfig] = None) -> Tuple[np.ndarray, ConicSolution]:
    """Build, solve and extract the SDP controller."""
    sol = solve_conic(build_h2_sdp(sys, eps, delta), config)
    if sol.status == ConicStatus.INFEASIBLE:
        raise Infeasible("H2 SDP is infeasible (no stabilizing state feedback)")
    if sol.status != ConicStatus.OPTIMAL:
        raise NumericalFailure(f"H2 SDP failed: {sol.message}")
    logger.info("H2 SDP solved by %s, Tr(W) = %.3e", sol.solver, sol.objective)
    return extract_h2_controller(sol, delta), sol
