"""
==============================================================================
DDSYNTH - DD CONTROLLER SYNTHESIS WITH PERFORMANCE
Successive Convex Inner Approximation of the Unified BMI Program
==============================================================================

Solves

    min J(alpha, F, P, X)
    s.t. A_F^T P + P A_F + Pi(P, alpha) <= 0,   V X - B F V = A V,   P > 0

by successive linearization of the concave part of a difference-of-convex
split of the bilinear Lyapunov term. Every iterate stays DD and, for the
Stability and Convergence variants, internally stable.

Pipeline:
1. initialize_ddpf      - pattern search over the DD-controller set for a Hurwitz loop
2. linearized_subproblem - convex inner approximation around the anchor
3. solve_ddpf           - Algorithm loop with DD repair and acceptance checks
4. evaluate_controller  - f_alpha, f_gain, f_H2, f_dd from F alone

Author: DDSynth Team
==============================================================================
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Callable, Dict, List, Optional, Tuple

import cvxpy as cp
import numpy as np

from app.control.conic import BackendConfig, ConicProgram, ConicSolution, solve_conic
from app.control.errors import NoStabilizingDd, PreconditionViolation
from app.control.geometry import (
    DdParameterization,
    Subspace,
    assemble_dd_system,
    dd_equation_residual,
    dd_feasible,
    dd_residual,
)
from app.control.h2 import h2_norm_sq
from app.control.linalg import DEFAULT_TOL, Tolerance, lyapunov_solve, max_eig, min_eig, spectral_abscissa, sym

if TYPE_CHECKING:
    from app.models import LtiSystem

logger = logging.getLogger(__name__)


# =============================================================================
# PROGRAM VARIANTS
# =============================================================================

class PiKind(str, Enum):
    """Performance certificate in the Lyapunov constraint"""
    STABILITY = "stability"          # Pi = H^T H + eps I
    CONVERGENCE = "convergence"      # Pi = 2 alpha P
    NO_STABILITY = "no_stability"    # constraint removed


@dataclass(frozen=True)
class PiVariant:
    kind: PiKind
    eps: float = 1e-6

    def __post_init__(self):
        if self.kind == PiKind.STABILITY and self.eps <= 0:
            raise ValueError("Stability variant needs eps > 0")

    @classmethod
    def stability(cls, eps: float = 1e-6) -> "PiVariant":
        return cls(PiKind.STABILITY, eps)

    @classmethod
    def convergence(cls) -> "PiVariant":
        return cls(PiKind.CONVERGENCE)

    @classmethod
    def no_stability(cls) -> "PiVariant":
        return cls(PiKind.NO_STABILITY)

    @property
    def has_alpha(self) -> bool:
        return self.kind == PiKind.CONVERGENCE


class ObjectiveKind(str, Enum):
    H2_TRACE = "h2_trace"      # Tr(E^T P E)
    NEG_ALPHA = "neg_alpha"    # -alpha
    GAIN_NORM = "gain_norm"    # ||F||_2
    CUSTOM = "custom"


@dataclass(frozen=True)
class Objective:
    """
    Convex objective J. A custom objective receives a mapping with the
    expressions "alpha", "F", "P", "X" and returns a convex scalar.
    """
    kind: ObjectiveKind
    fn: Optional[Callable[[Dict[str, cp.Expression]], cp.Expression]] = None

    @classmethod
    def h2_trace(cls) -> "Objective":
        return cls(ObjectiveKind.H2_TRACE)

    @classmethod
    def neg_alpha(cls) -> "Objective":
        return cls(ObjectiveKind.NEG_ALPHA)

    @classmethod
    def gain_norm(cls) -> "Objective":
        return cls(ObjectiveKind.GAIN_NORM)

    @classmethod
    def custom(cls, fn: Callable[[Dict[str, cp.Expression]], cp.Expression]) -> "Objective":
        return cls(ObjectiveKind.CUSTOM, fn)

    def expression(self, sys: LtiSystem, terms: Dict[str, cp.Expression]) -> cp.Expression:
        if self.kind == ObjectiveKind.H2_TRACE:
            return cp.trace(sys.E.T @ terms["P"] @ sys.E)
        if self.kind == ObjectiveKind.NEG_ALPHA:
            return -terms["alpha"]
        if self.kind == ObjectiveKind.GAIN_NORM:
            return cp.norm(terms["F"], 2)
        if self.fn is None:
            raise ValueError("custom objective needs a callable")
        return self.fn(terms)

    def value(self, sys: LtiSystem, alpha: float, F: np.ndarray, P: np.ndarray, X: np.ndarray) -> float:
        terms = {"alpha": cp.Constant(alpha), "F": cp.Constant(F), "P": cp.Constant(P), "X": cp.Constant(X)}
        return float(self.expression(sys, terms).value)


@dataclass(frozen=True)
class SolveConfig:
    """Algorithm and initialization settings"""
    gamma: float = 1e-1
    stop_eps: float = 1e-8
    max_iters: int = 200
    delta: float = 1e-6
    margin_tol: float = 1e-7
    alpha_cap: float = 1.0
    lyap_eta: float = 1e-3
    lmi_backoff: float = 1e-6
    gamma_growth: float = 10.0
    max_retries: int = 3
    init_starts: int = 20
    init_step: float = 1.0
    init_shrink: float = 0.5
    init_floor: float = 1e-6
    init_budget: int = 5000
    init_margin: float = 0.1

    def __post_init__(self):
        positives = ("gamma", "stop_eps", "delta", "margin_tol", "alpha_cap", "lyap_eta",
                     "init_step", "init_floor", "init_margin")
        for name in positives:
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.max_iters < 1 or self.init_budget < 1 or self.init_starts < 0:
            raise ValueError("max_iters and init_budget must be >= 1, init_starts >= 0")
        if not 0 < self.init_shrink < 1:
            raise ValueError("init_shrink must lie in (0, 1)")
        if not 0 <= self.lmi_backoff < self.lyap_eta:
            raise ValueError("lmi_backoff must lie in [0, lyap_eta)")
        if self.gamma_growth <= 1 or self.max_retries < 0:
            raise ValueError("gamma_growth must exceed 1 and max_retries must be >= 0")


@dataclass(frozen=True, eq=False)
class Iterate:
    """Feasible point (alpha, F, P, X) of the unified program."""
    alpha: float
    F: np.ndarray
    P: np.ndarray
    X: np.ndarray
    objective_value: float
    dd_residual: float
    lyap_margin: float
    penalty: float = 0.0


@dataclass(frozen=True)
class MetricsRow:
    """
    Controller metrics, every column lower-is-better:
    f_alpha = spectral abscissa of A_F, f_gain = ||F||_2,
    f_h2 = squared H2 norm (truncated diagnostic if not hurwitz), f_dd = DD residual.
    """
    f_alpha: float
    f_gain: float
    f_h2: float
    f_dd: float
    hurwitz: bool


class StopReason(str, Enum):
    """Why a synthesis run ended"""
    CONVERGED = "converged"
    MAX_ITERS = "max_iters"
    NUMERICAL_FAILURE = "numerical_failure"
    INFEASIBLE_STEP = "infeasible_step"

    @property
    def is_failure(self) -> bool:
        return self in (StopReason.NUMERICAL_FAILURE, StopReason.INFEASIBLE_STEP)


@dataclass(eq=False)
class SynthesisResult:
    """Controller with its certificates, metrics and solve history."""
    F: np.ndarray
    metrics: MetricsRow
    X: Optional[np.ndarray] = None
    P: Optional[np.ndarray] = None
    alpha: Optional[float] = None
    iterations: int = 0
    converged: bool = True
    warning: Optional[str] = None
    kkt_residual: Optional[float] = None
    trace: List[Iterate] = field(default_factory=list)
    mode: Optional[str] = None
    stop_reason: StopReason = StopReason.CONVERGED


# =============================================================================
# CERTIFICATE HELPERS
# =============================================================================

def _pi_constant(sys: LtiSystem, pi: PiVariant) -> np.ndarray:
    if pi.kind == PiKind.STABILITY:
        return sys.H.T @ sys.H + pi.eps * np.eye(sys.n)
    return np.zeros((sys.n, sys.n))


def lyap_margin(sys: LtiSystem, pi: PiVariant, alpha: float, F: np.ndarray, P: np.ndarray) -> float:
    """Largest eigenvalue of A_F^T P + P A_F + Pi(P, alpha)."""
    if pi.kind == PiKind.NO_STABILITY:
        return 0.0
    Z = sys.A + sys.B @ F
    if pi.kind == PiKind.CONVERGENCE:
        Z = Z + alpha * np.eye(sys.n)
    return max_eig(Z.T @ P + P @ Z + _pi_constant(sys, pi))


def _make_iterate(sys: LtiSystem, V: Subspace, obj: Objective, pi: PiVariant,
                  alpha: float, F: np.ndarray, P: np.ndarray, X: np.ndarray, penalty: float = 0.0) -> Iterate:
    return Iterate(
        alpha=float(alpha),
        F=F,
        P=P,
        X=X,
        objective_value=obj.value(sys, alpha, F, P, X),
        dd_residual=dd_equation_residual(sys, V, X, F),
        lyap_margin=lyap_margin(sys, pi, alpha, F, P),
        penalty=penalty,
    )


# =============================================================================
# DC DECOMPOSITION
# =============================================================================

def bilinear_form(Z: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Y^T Z + Z^T Y."""
    return Y.T @ Z + Z.T @ Y


def linearization_term(dZ, dY, Zk: np.ndarray, Yk: np.ndarray):
    """dZ^T Z^k + (Z^k)^T dZ + dY^T Y^k + (Y^k)^T dY (numeric or cvxpy)."""
    return dZ.T @ Zk + Zk.T @ dZ + dY.T @ Yk + Yk.T @ dY


def inner_approximation(Z: np.ndarray, Y: np.ndarray, Zk: np.ndarray, Yk: np.ndarray) -> np.ndarray:
    """
    G1(Z, Y) - G2(Z^k, Y^k) - L(dZ, dY), which dominates Y^T Z + Z^T Y and
    equals it at (Z^k, Y^k). G1 = (Z+Y)^T (Z+Y), G2 = Z^T Z + Y^T Y.
    """
    G1 = (Z + Y).T @ (Z + Y)
    G2k = Zk.T @ Zk + Yk.T @ Yk
    return G1 - G2k - linearization_term(Z - Zk, Y - Yk, Zk, Yk)


# =============================================================================
# INITIALIZATION
# =============================================================================

def _pattern_search(f: Callable[[np.ndarray], float], theta: np.ndarray, cfg: SolveConfig) -> Tuple[np.ndarray, float]:
    """Coordinate pattern search with a shrinking step; stops at the target margin."""
    best = f(theta)
    evals, step = 1, cfg.init_step
    dims = theta.size
    while step > cfg.init_floor and evals < cfg.init_budget and best > -cfg.init_margin:
        improved = False
        for i in range(dims):
            for sign in (1.0, -1.0):
                candidate = theta.copy()
                candidate[i] += sign * step
                value = f(candidate)
                evals += 1
                if value < best:
                    theta, best, improved = candidate, value, True
                    break
            if evals >= cfg.init_budget:
                break
        if not improved:
            step *= cfg.init_shrink
        if dims == 0:
            break
    return theta, best


def initialize_ddpf(sys: LtiSystem, V: Subspace, param: DdParameterization, seed: int,
                    pi: PiVariant = PiVariant.stability(), cfg: SolveConfig = SolveConfig(),
                    tol: Tolerance = DEFAULT_TOL) -> Iterate:
    """
    Feasible starting point for the successive linearization.

    Minimizes the spectral abscissa of A + B F(theta) over the DD-controller set
    from theta = 0 and then from seeded random starts, and builds P from a
    Lyapunov equation with margin eta.

    Raises:
        PreconditionViolation: im E is not inside V or V is not inside ker H
        NoStabilizingDd: no Hurwitz DD controller was found
    """
    if not dd_feasible(sys, V, tol):
        raise PreconditionViolation("DD is infeasible for this V (need im E <= im V <= ker H)")

    def controller(theta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return param.split(param.point(theta))

    def abscissa(theta: np.ndarray) -> float:
        _, F = controller(theta)
        return spectral_abscissa(sys.A + sys.B @ F)

    objective = Objective.h2_trace()
    if pi.kind == PiKind.NO_STABILITY:
        X, F = controller(np.zeros(param.n_free))
        return _make_iterate(sys, V, objective, pi, 0.0, F, np.eye(sys.n), X)

    rng = np.random.default_rng(seed)
    best_theta, best_value = None, np.inf
    for start in range(cfg.init_starts + 1):
        theta0 = np.zeros(param.n_free) if start == 0 else rng.standard_normal(param.n_free)
        theta, value = _pattern_search(abscissa, theta0, cfg)
        logger.debug("init start %d: spectral abscissa %.4f", start, value)
        if value < best_value:
            best_theta, best_value = theta, value
        if best_value <= -cfg.init_margin:
            break

    if best_theta is None or not best_value < 0:
        raise NoStabilizingDd(
            f"no Hurwitz DD controller found (best spectral abscissa {best_value:.3e})"
        )

    X, F = controller(best_theta)
    AF = sys.A + sys.B @ F
    eta = cfg.lyap_eta * np.eye(sys.n)
    if pi.kind == PiKind.CONVERGENCE:
        alpha = -best_value / 2
        P = lyapunov_solve(AF + alpha * np.eye(sys.n), eta, tol)
    else:
        alpha = 0.0
        P = lyapunov_solve(AF, _pi_constant(sys, pi) + eta, tol)
    smallest = min_eig(P)
    if smallest < 2 * cfg.delta:
        P = P * (2 * cfg.delta / smallest)
    logger.info("initial DD controller: spectral abscissa %.4f", best_value)
    return _make_iterate(sys, V, objective, pi, alpha, F, sym(P), X)


# =============================================================================
# LINEARIZED SUBPROBLEM
# =============================================================================

def linearized_subproblem(sys: LtiSystem, V: Subspace, obj: Objective, pi: PiVariant, anchor: Iterate,
                          cfg: SolveConfig = SolveConfig(),
                          param: Optional[DdParameterization] = None,
                          gamma: Optional[float] = None) -> ConicProgram:
    """
    Convex inner approximation around the anchor:

        min J + gamma/2 (|alpha - alpha^k|^2 + ||P - P^k||_F^2 + ||F - F^k||_F^2)
        s.t. [ G2(Z^k, P^k) + L - Pi_c - b I   (Z + P)^T ]  >= 0
             [ Z + P                           I         ]
             reduced DD equality, P >= delta I

    b is cfg.lmi_backoff; gamma defaults to cfg.gamma.
    """
    gamma = cfg.gamma if gamma is None else gamma
    if obj.kind == ObjectiveKind.NEG_ALPHA and not pi.has_alpha:
        raise ValueError("the -alpha objective needs the convergence variant")
    param = param or assemble_dd_system(sys, V)
    n, m, k = sys.n, sys.m, V.dim

    F = cp.Variable((m, n), name="F")
    X = cp.Variable((k, k), name="X")
    P = cp.Variable((n, n), symmetric=True, name="P")
    variables = {"F": F, "P": P, "X": X}
    if pi.has_alpha:
        alpha = cp.Variable(name="alpha")
        variables = {"alpha": alpha, **variables}
        alpha_expr = alpha
    else:
        alpha_expr = cp.Constant(anchor.alpha)

    terms = {"alpha": alpha_expr, "F": F, "P": P, "X": X}
    proximal = cp.sum_squares(F - anchor.F) + cp.sum_squares(P - anchor.P)
    if pi.has_alpha:
        proximal = proximal + cp.square(alpha - anchor.alpha)
    objective = obj.expression(sys, terms) + (gamma / 2) * proximal

    y = cp.hstack([cp.vec(X, order="F"), cp.vec(F, order="F")])
    equalities = []
    if param.constraint_matrix.shape[0]:
        equalities.append(("dd", param.constraint_matrix @ y - param.rhs))

    eye = np.eye(n)
    psd_blocks = [("strictness", P - cfg.delta * eye)]
    if pi.kind != PiKind.NO_STABILITY:
        Z = sys.A + sys.B @ F
        Zk = sys.A + sys.B @ anchor.F
        if pi.has_alpha:
            Z = Z + alpha * eye
            Zk = Zk + anchor.alpha * eye
        G2k = Zk.T @ Zk + anchor.P @ anchor.P
        top_left = (G2k + linearization_term(Z - Zk, P - anchor.P, Zk, anchor.P)
                    - _pi_constant(sys, pi) - cfg.lmi_backoff * eye)
        psd_blocks.insert(0, ("lyapunov", cp.bmat([[top_left, (Z + P).T], [Z + P, eye]])))

    extra = [alpha <= cfg.alpha_cap] if pi.has_alpha else []
    return ConicProgram(
        variables=variables,
        objective=objective,
        equalities=equalities,
        psd_blocks=psd_blocks,
        extra=extra,
    )


# =============================================================================
# SUCCESSIVE LINEARIZATION
# =============================================================================

def kkt_residual(sys: LtiSystem, pi: PiVariant, anchor: Iterate, sol: ConicSolution, gamma: float) -> float:
    """
    First-order residual of a subproblem solution for the unified program.

    The multiplier of the BMI is the top-left block of the Lyapunov block's
    dual. Stationarity of the subproblem leaves the proximal gradient and the
    gradient of the DC gap dZ^T dZ + dP^T dP as the unified residual; the
    complementarity term pairs the multiplier with the true BMI.
    """
    n = sys.n
    F = np.asarray(sol.values["F"], dtype=float)
    P = sym(np.asarray(sol.values["P"], dtype=float))
    alpha = float(sol.values["alpha"]) if pi.has_alpha else anchor.alpha
    dF, dP, d_alpha = F - anchor.F, P - anchor.P, alpha - anchor.alpha
    grad_F, grad_P, grad_alpha = gamma * dF, gamma * dP, gamma * d_alpha

    complementarity = 0.0
    dual = sol.duals.get("lyapunov")
    if dual is not None:
        lam = sym(np.asarray(dual, dtype=float)[:n, :n])
        eye = np.eye(n)
        dZ = sys.B @ dF + d_alpha * eye
        grad_F = grad_F + 2 * sys.B.T @ dZ @ lam
        grad_P = grad_P + dP @ lam + lam @ dP
        grad_alpha = grad_alpha + 2 * float(np.trace(lam @ dZ))
        Z = sys.A + sys.B @ F + (alpha * eye if pi.has_alpha else 0.0)
        complementarity = abs(float(np.sum(lam * (Z.T @ P + P @ Z + _pi_constant(sys, pi)))))

    stationarity_sq = np.linalg.norm(grad_F, "fro") ** 2 + np.linalg.norm(grad_P, "fro") ** 2
    if pi.has_alpha:
        stationarity_sq += grad_alpha ** 2
    return float(np.sqrt(stationarity_sq) + complementarity)


def _step_scale(it: Iterate) -> float:
    """1 + ||(alpha, P, F)||^2, the reference for the relative stopping rule."""
    return float(1.0 + it.alpha ** 2 + np.linalg.norm(it.P, "fro") ** 2 + np.linalg.norm(it.F, "fro") ** 2)


def _candidate(sys: LtiSystem, V: Subspace, obj: Objective, pi: PiVariant, param: DdParameterization,
               anchor: Iterate, sol: ConicSolution, gamma: float) -> Tuple[Iterate, float]:
    X, F = param.project(sol.values["X"], sol.values["F"])
    P = sym(np.asarray(sol.values["P"], dtype=float))
    alpha = float(sol.values["alpha"]) if pi.has_alpha else anchor.alpha
    step_sq = float((alpha - anchor.alpha) ** 2
                    + np.linalg.norm(P - anchor.P, "fro") ** 2
                    + np.linalg.norm(F - anchor.F, "fro") ** 2)
    return _make_iterate(sys, V, obj, pi, alpha, F, P, X, penalty=gamma / 2 * step_sq), step_sq


def solve_ddpf(sys: LtiSystem, V: Subspace, obj: Objective, pi: PiVariant, cfg: SolveConfig, init: Iterate,
               param: Optional[DdParameterization] = None,
               backend: Optional[BackendConfig] = None) -> Tuple[SynthesisResult, List[Iterate]]:
    """
    Iterate convex subproblems from a feasible initial point until the squared
    step over (alpha, P, F) drops below stop_eps * (1 + ||(alpha, P, F)||^2)
    or max_iters is reached.

    A subproblem that fails or returns a point violating the true BMI is solved
    again from the same anchor with gamma multiplied by gamma_growth, at most
    max_retries times, and the larger gamma is kept. When the retries run out
    the run ends with the best iterate so far and a warning on the result.
    """
    param = param or assemble_dd_system(sys, V)
    anchor = _make_iterate(sys, V, obj, pi, init.alpha, init.F, init.P, init.X)
    trace = [anchor]
    gamma = cfg.gamma
    reason, warning, kkt = StopReason.MAX_ITERS, None, None

    for iteration in range(1, cfg.max_iters + 1):
        candidate, failure, step_sq = None, None, 0.0
        for attempt in range(cfg.max_retries + 1):
            if attempt:
                gamma *= cfg.gamma_growth
                logger.info("subproblem %d %s; retrying with gamma %.1e", iteration, failure[1], gamma)
            program = linearized_subproblem(sys, V, obj, pi, anchor, cfg, param, gamma=gamma)
            sol = solve_conic(program, backend)
            if not sol.ok:
                failure = (StopReason.NUMERICAL_FAILURE, f"failed: {sol.status.value} ({sol.message})")
                continue
            candidate, step_sq = _candidate(sys, V, obj, pi, param, anchor, sol, gamma)
            smallest = min_eig(candidate.P)
            if candidate.lyap_margin <= cfg.margin_tol and smallest >= cfg.delta / 2:
                break
            failure = (StopReason.INFEASIBLE_STEP,
                       f"returned an infeasible point (lyapunov margin {candidate.lyap_margin:.2e}, "
                       f"min eig P {smallest:.2e})")
            candidate = None

        if candidate is None:
            reason = failure[0]
            warning = f"subproblem {iteration} {failure[1]} after {cfg.max_retries} retries"
            logger.warning(warning)
            break

        trace.append(candidate)
        kkt = kkt_residual(sys, pi, anchor, sol, gamma)
        scale = _step_scale(anchor)
        anchor = candidate
        logger.debug("iter %d: J=%.6e step=%.3e dd=%.2e margin=%.2e gamma=%.1e",
                     iteration, candidate.objective_value, step_sq, candidate.dd_residual,
                     candidate.lyap_margin, gamma)
        if step_sq <= cfg.stop_eps * scale:
            reason = StopReason.CONVERGED
            break

    if reason == StopReason.MAX_ITERS:
        warning = f"stopping rule did not fire within {cfg.max_iters} iterations"
        logger.warning(warning)

    converged = reason == StopReason.CONVERGED
    result = SynthesisResult(
        F=anchor.F,
        X=anchor.X,
        P=anchor.P,
        alpha=anchor.alpha if pi.has_alpha else None,
        metrics=evaluate_controller(sys, V, anchor.F),
        iterations=len(trace) - 1,
        converged=converged,
        warning=warning,
        kkt_residual=kkt,
        trace=trace,
        stop_reason=reason,
    )
    logger.info("DDPF %s/%s: %d iterations, %s, J=%.6e",
                obj.kind.value, pi.kind.value, result.iterations, reason.value, anchor.objective_value)
    return result, trace


# =============================================================================
# EVALUATION
# =============================================================================

def evaluate_controller(sys: LtiSystem, V: Subspace, F: np.ndarray, tol: Tolerance = DEFAULT_TOL,
                        horizon: float = 50.0, dt: float = 1e-3) -> MetricsRow:
    """Metrics computed from F alone, identically for every synthesis mode."""
    F = sys.gain(F)
    report = h2_norm_sq(sys, F, tol, horizon, dt)
    return MetricsRow(
        f_alpha=spectral_abscissa(sys.A + sys.B @ F),
        f_gain=float(np.linalg.norm(F, 2)),
        f_h2=float(report.h2_sq),
        f_dd=dd_residual(sys, V, F),
        hurwitz=report.hurwitz,
    )
