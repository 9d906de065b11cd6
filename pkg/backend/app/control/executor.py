"""
==============================================================================
DDSYNTH - SYNTHESIS EXECUTOR
Mode Routing for Controller Synthesis
==============================================================================

Routes a synthesis request to the right engine:

    h2-sdp    -> H2 semidefinite program (no DD constraint)
    dd-only   -> minimum-norm solution of the DD equation (no stability)
    dd-h2     -> DDPF, objective Tr(E^T P E), Stability variant
    dd-alpha  -> DDPF, objective -alpha, Convergence variant
    dd-gain   -> DDPF, objective ||F||_2, Stability variant

Every mode returns a SynthesisResult whose metrics are computed from F alone.

Author: DDSynth Team
==============================================================================
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Dict, Optional, Tuple

from app.control.conic import BackendConfig
from app.control.ddpf import (
    Objective,
    PiVariant,
    SolveConfig,
    SynthesisResult,
    evaluate_controller,
    initialize_ddpf,
    solve_ddpf,
)
from app.control.geometry import (
    Subspace,
    assemble_dd_system,
    check_rcq,
    largest_ci_subspace,
    least_squares_x,
    solve_dd,
)
from app.control.h2 import DEFAULT_SDP_DELTA, DEFAULT_SDP_EPS, synthesize_h2
from app.control.linalg import DEFAULT_TOL, Tolerance

if TYPE_CHECKING:
    from app.models import LtiSystem

logger = logging.getLogger(__name__)


class SynthesisMode(str, Enum):
    """Controller synthesis modes"""
    H2_SDP = "h2-sdp"
    DD_ONLY = "dd-only"
    DD_H2 = "dd-h2"
    DD_ALPHA = "dd-alpha"
    DD_GAIN = "dd-gain"

    @property
    def is_ddpf(self) -> bool:
        return self in DDPF_ROUTES


DDPF_ROUTES: Dict[SynthesisMode, Tuple[str, str]] = {
    SynthesisMode.DD_H2: ("h2_trace", "stability"),
    SynthesisMode.DD_ALPHA: ("neg_alpha", "convergence"),
    SynthesisMode.DD_GAIN: ("gain_norm", "stability"),
}


@dataclass
class ExecutorConfig:
    """Everything a synthesis run depends on besides the plant and the seed"""
    tol: Tolerance = DEFAULT_TOL
    backend: BackendConfig = field(default_factory=BackendConfig)
    solve: SolveConfig = field(default_factory=SolveConfig)
    sdp_eps: float = DEFAULT_SDP_EPS
    sdp_delta: float = DEFAULT_SDP_DELTA
    stability_eps: float = 1e-6
    h2_horizon: float = 50.0
    h2_dt: float = 1e-3


class SynthesisExecutor:
    """
    Synthesis executor for all controller modes.

    Features:
    - Shared subspace computation (largest controlled-invariant subspace in ker H)
    - RCQ preflight before the DDPF modes
    - Uniform metrics for every mode
    """

    def __init__(self, config: Optional[ExecutorConfig] = None):
        self.config = config or ExecutorConfig()

    def route(self, mode: SynthesisMode) -> Tuple[Objective, PiVariant]:
        """Objective and Lyapunov variant for a DDPF mode."""
        objective_name, variant_name = DDPF_ROUTES[mode]
        objective = getattr(Objective, objective_name)()
        if variant_name == "stability":
            return objective, PiVariant.stability(self.config.stability_eps)
        return objective, getattr(PiVariant, variant_name)()

    def execute(self, sys: LtiSystem, mode: SynthesisMode, seed: int = 0,
                V: Optional[Subspace] = None) -> SynthesisResult:
        """
        Synthesize one controller.

        Args:
            sys: Plant
            mode: Synthesis mode
            seed: Seed for the DDPF initialization search
            V: Subspace to decouple with (defaults to the largest
               controlled-invariant subspace in ker H)

        Returns:
            SynthesisResult with metrics, certificates and, for DDPF modes, the iterate trace
        """
        mode = SynthesisMode(mode)
        cfg = self.config
        V = V if V is not None else largest_ci_subspace(sys, cfg.tol)
        logger.info("synthesizing %s controller for %s (n=%d, dim V=%d)", mode.value, sys.name, sys.n, V.dim)

        if mode == SynthesisMode.H2_SDP:
            F, sol = synthesize_h2(sys, cfg.sdp_eps, cfg.sdp_delta, cfg.backend)
            result = SynthesisResult(
                F=F,
                metrics=self._metrics(sys, V, F),
                X=least_squares_x(sys, V, F) if V.dim else None,
                P=sol.values["P"],
                iterations=1,
            )
        elif mode == SynthesisMode.DD_ONLY:
            solution = solve_dd(sys, V, cfg.tol)
            result = SynthesisResult(F=solution.F, metrics=self._metrics(sys, V, solution.F), X=solution.X)
        else:
            check_rcq(sys, V, cfg.tol)
            objective, pi = self.route(mode)
            param = assemble_dd_system(sys, V, cfg.tol)
            init = initialize_ddpf(sys, V, param, seed, pi, cfg.solve, cfg.tol)
            result, _ = solve_ddpf(sys, V, objective, pi, cfg.solve, init, param, cfg.backend)
            result.metrics = self._metrics(sys, V, result.F)

        result.mode = mode.value
        m = result.metrics
        logger.info("%s: f_alpha=%.3e f_gain=%.3e f_h2=%.3e f_dd=%.3e",
                    mode.value, m.f_alpha, m.f_gain, m.f_h2, m.f_dd)
        return result

    def _metrics(self, sys: LtiSystem, V: Subspace, F):
        cfg = self.config
        return evaluate_controller(sys, V, F, cfg.tol, cfg.h2_horizon, cfg.h2_dt)
