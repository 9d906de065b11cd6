"""
==============================================================================
DDSYNTH - NUMERICAL ENGINE
Disturbance Decoupling Controller Synthesis with Performance
==============================================================================

This package provides the complete synthesis pipeline:

1. Linear Algebra - kernels, images, row echelon form, Lyapunov solves
2. Geometry - controlled-invariant subspaces and the DD matrix equation
3. Conic Backend - semidefinite programs with solver fallback
4. H2 - Gramians, H2 norm and the state-feedback SDP
5. DDPF - successive convex inner approximation of the unified BMI program
6. Simulation - ZOH closed-loop simulation, noise sweeps, energy bounds
7. Executor - synthesis mode routing

Author: DDSynth Team
==============================================================================
"""

from .errors import (
    SynthesisError,
    DimensionMismatch,
    NonFiniteMatrix,
    SingularLyapunov,
    Infeasible,
    PreconditionViolation,
    NoStabilizingDd,
    NumericalFailure,
    IllConditionedP,
)

from .linalg import (
    Tolerance,
    DEFAULT_TOL,
    kernel_basis,
    image_basis,
    rre,
    kron,
    vec,
    unvec,
    lyapunov_solve,
    expm,
    spectral_abscissa,
)

from .geometry import (
    Subspace,
    DdSolution,
    DdParameterization,
    RcqReport,
    ci_subspace_sequence,
    largest_ci_subspace,
    dd_feasible,
    assemble_dd_system,
    solve_dd,
    dd_residual,
    check_rcq,
)

from .conic import (
    ConicStatus,
    BackendConfig,
    ConicProgram,
    ConicSolution,
    ConicBackend,
    solve_conic,
)

from .h2 import (
    H2Report,
    observability_gramian,
    h2_norm_sq,
    impulse_response,
    build_h2_sdp,
    extract_h2_controller,
    synthesize_h2,
)

from .ddpf import (
    PiKind,
    PiVariant,
    ObjectiveKind,
    Objective,
    SolveConfig,
    Iterate,
    MetricsRow,
    SynthesisResult,
    initialize_ddpf,
    linearized_subproblem,
    solve_ddpf,
    evaluate_controller,
)

from .sim import (
    DisturbanceKind,
    DisturbanceSpec,
    SimulationTrace,
    EnergyReport,
    simulate,
    noise_sweep,
    energy_bound_check,
)

from .executor import (
    SynthesisMode,
    ExecutorConfig,
    SynthesisExecutor,
)


__all__ = [
    # Errors
    "SynthesisError",
    "DimensionMismatch",
    "NonFiniteMatrix",
    "SingularLyapunov",
    "Infeasible",
    "PreconditionViolation",
    "NoStabilizingDd",
    "NumericalFailure",
    "IllConditionedP",

    # Linear Algebra
    "Tolerance",
    "DEFAULT_TOL",
    "kernel_basis",
    "image_basis",
    "rre",
    "kron",
    "vec",
    "unvec",
    "lyapunov_solve",
    "expm",
    "spectral_abscissa",

    # Geometry
    "Subspace",
    "DdSolution",
    "DdParameterization",
    "RcqReport",
    "ci_subspace_sequence",
    "largest_ci_subspace",
    "dd_feasible",
    "assemble_dd_system",
    "solve_dd",
    "dd_residual",
    "check_rcq",

    # Conic Backend
    "ConicStatus",
    "BackendConfig",
    "ConicProgram",
    "ConicSolution",
    "ConicBackend",
    "solve_conic",

    # H2
    "H2Report",
    "observability_gramian",
    "h2_norm_sq",
    "impulse_response",
    "build_h2_sdp",
    "extract_h2_controller",
    "synthesize_h2",

    # DDPF
    "PiKind",
    "PiVariant",
    "ObjectiveKind",
    "Objective",
    "SolveConfig",
    "Iterate",
    "MetricsRow",
    "SynthesisResult",
    "initialize_ddpf",
    "linearized_subproblem",
    "solve_ddpf",
    "evaluate_controller",

    # Simulation
    "DisturbanceKind",
    "DisturbanceSpec",
    "SimulationTrace",
    "EnergyReport",
    "simulate",
    "noise_sweep",
    "energy_bound_check",

    # Executor
    "SynthesisMode",
    "ExecutorConfig",
    "SynthesisExecutor",
]
