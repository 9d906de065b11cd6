"""
Error hierarchy for the synthesis engine.

Every error carries the process exit code the CLI maps it to:
0 success, 1 usage, 2 infeasible, 3 numerical failure.
"""


class SynthesisError(Exception):
    """Base class for all engine errors."""

    exit_code = 1


class DimensionMismatch(SynthesisError, ValueError):
    """Matrix shapes do not agree with the system they belong to."""


class NonFiniteMatrix(SynthesisError, ValueError):
    """A matrix carries NaN or Inf entries."""


class SingularLyapunov(SynthesisError):
    """The Kronecker Lyapunov operator is rank deficient."""

    exit_code = 3


class Infeasible(SynthesisError):
    """No DD controller (or no conic solution) exists for the given data."""

    exit_code = 2


class PreconditionViolation(SynthesisError):
    """Inputs violate a documented precondition (e.g. im E not inside V)."""

    exit_code = 2


class NoStabilizingDd(SynthesisError):
    """Search over the DD-controller set found no Hurwitz closed loop."""

    exit_code = 2


class NumericalFailure(SynthesisError):
    """The conic backend broke down or returned an unusable point."""

    exit_code = 3


class IllConditionedP(UserWarning):
    """P is invertible but badly conditioned; the extracted gain is still returned."""
