"""
==============================================================================
DDSYNTH - CONIC PROGRAM BACKEND
Solver-Agnostic Semidefinite Programs with Automatic Fallback
==============================================================================

This module handles:
- A named-variable conic program (objective, equalities, PSD blocks)
- Priority-ordered solver selection with automatic fallback
- Post-solve verification of PSD and equality residuals
- A plain-text dump of the program for external SDP tools

Author: DDSynth Team
==============================================================================
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterator, List, Optional, Tuple

import cvxpy as cp
import numpy as np

logger = logging.getLogger(__name__)


class ConicStatus(str, Enum):
    """Outcome of a conic solve"""
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass
class BackendConfig:
    """Configuration for the conic backend"""
    solvers: List[str] = field(default_factory=lambda: ["CLARABEL", "SCS"])
    max_iters: int = 500
    scs_max_iters: int = 20000
    feas_tol: float = 1e-9
    accept_tol: float = 1e-6
    verbose: bool = False

    def solver_options(self, solver: str) -> Dict[str, float]:
        """Map generic options onto each solver's own keywords."""
        if solver == "CLARABEL":
            return {
                "max_iter": self.max_iters,
                "tol_feas": self.feas_tol,
                "tol_gap_abs": self.feas_tol,
                "tol_gap_rel": self.feas_tol,
            }
        if solver == "SCS":
            return {
                "max_iters": self.scs_max_iters,
                "eps_abs": self.feas_tol,
                "eps_rel": self.feas_tol,
            }
        return {}


@dataclass
class ConicProgram:
    """
    Convex program over named matrix variables.

    Every PSD block is an affine symmetric-matrix expression constrained to be
    positive semidefinite; ``extra`` holds any remaining convex constraints
    (bounds, proximal epigraphs).
    """
    variables: Dict[str, cp.Variable]
    objective: cp.Expression
    equalities: List[Tuple[str, cp.Expression]] = field(default_factory=list)
    psd_blocks: List[Tuple[str, cp.Expression]] = field(default_factory=list)
    extra: List[cp.Constraint] = field(default_factory=list)

    def __post_init__(self):
        self._psd_constraints: List[cp.Constraint] = []
        self._eq_constraints: List[cp.Constraint] = []

    def build(self) -> cp.Problem:
        self._eq_constraints = [expr == 0 for _, expr in self.equalities]
        self._psd_constraints = [(0.5 * (block + block.T)) >> 0 for _, block in self.psd_blocks]
        return cp.Problem(
            cp.Minimize(self.objective),
            self._eq_constraints + self._psd_constraints + list(self.extra),
        )

    def layout(self) -> Dict[str, Tuple[int, int]]:
        """Offset and size of each variable in the flat decision vector."""
        offsets, offset = {}, 0
        for name, var in self.variables.items():
            size = len(list(_basis_directions(var)))
            offsets[name] = (offset, size)
            offset += size
        return offsets

    def dump(self) -> str:
        """Plain-text interchange: variable layout plus sparse triplets of every affine map."""
        layout = self.layout()
        total = sum(size for _, size in layout.values())
        lines = ["# ddsynth conic program", f"decision_vector {total}"]
        for name, var in self.variables.items():
            offset, size = layout[name]
            kind = "sym" if var.attributes.get("symmetric") else "full"
            rows, cols = _shape2(var)
            lines.append(f"variable {name} {rows} {cols} {kind} offset {offset} size {size}")

        sections = [("objective", "objective", self.objective)] if self.objective.is_affine() else []
        sections += [("equality", name, expr) for name, expr in self.equalities]
        sections += [("psd", name, block) for name, block in self.psd_blocks]
        for kind, name, expr in sections:
            constant, columns = _affine_coefficients(self.variables, expr)
            rows, cols = constant.shape
            lines.append(f"{kind} {name} {rows} {cols}")
            for i, j in zip(*np.nonzero(constant)):
                lines.append(f"  const {i} {j} {constant[i, j]:.17g}")
            for col, coeff in enumerate(columns):
                for i, j in zip(*np.nonzero(coeff)):
                    lines.append(f"  {col} {i} {j} {coeff[i, j]:.17g}")
        if not self.objective.is_affine():
            lines.append("objective nonlinear (convex); see program source")
        return "\n".join(lines) + "\n"


@dataclass
class ConicSolution:
    """Result of a conic solve"""
    status: ConicStatus
    values: Dict[str, np.ndarray]
    objective: float
    max_psd_violation: float
    max_equality_residual: float
    duals: Dict[str, np.ndarray] = field(default_factory=dict)
    complementarity: float = 0.0
    solver: Optional[str] = None
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == ConicStatus.OPTIMAL


# =============================================================================
# COEFFICIENT EXTRACTION HELPERS
# =============================================================================

def _shape2(var: cp.Variable) -> Tuple[int, int]:
    shape = tuple(var.shape) + (1, 1)
    return int(shape[0]), int(shape[1])


def _basis_directions(var: cp.Variable) -> Iterator[np.ndarray]:
    rows, cols = _shape2(var)
    symmetric = bool(var.attributes.get("symmetric"))
    for j in range(cols):
        for i in range(rows):
            if symmetric and i < j:
                continue
            direction = np.zeros((rows, cols))
            direction[i, j] = 1.0
            if symmetric:
                direction[j, i] = 1.0
            yield direction.reshape(var.shape)


def _as_2d(value) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    return arr.reshape(arr.shape + (1,) * (2 - arr.ndim)) if arr.ndim < 2 else arr


def _affine_coefficients(variables: Dict[str, cp.Variable], expr: cp.Expression):
    saved = {name: var.value for name, var in variables.items()}
    try:
        for var in variables.values():
            var.value = np.zeros(var.shape)
        constant = _as_2d(expr.value)
        columns = []
        for var in variables.values():
            for direction in _basis_directions(var):
                var.value = direction
                columns.append(_as_2d(expr.value) - constant)
            var.value = np.zeros(var.shape)
        return constant, columns
    finally:
        for name, var in variables.items():
            var.value = saved[name]


# =============================================================================
# BACKEND
# =============================================================================

class ConicBackend:
    """
    Conic solver front end with automatic fallback.

    Features:
    - Priority-based solver selection (Clarabel first, SCS second by default)
    - Fallback on solver exceptions and on unverifiable optima
    - Usage tracking
    """

    def __init__(self, config: Optional[BackendConfig] = None):
        self.config = config or BackendConfig()
        installed = set(cp.installed_solvers())
        self.solver_priority = [s for s in self.config.solvers if s in installed]

        # Metrics
        self.total_solves = 0
        self.fallback_count = 0
        self.solver_usage: Dict[str, int] = {}

    def solve(self, program: ConicProgram) -> ConicSolution:
        """
        Solve a program with the best available solver.

        Never raises: breakdowns come back as NUMERICAL_FAILURE.
        """
        self.total_solves += 1
        problem = program.build()
        last = ConicSolution(
            status=ConicStatus.NUMERICAL_FAILURE, values={}, objective=float("nan"),
            max_psd_violation=float("inf"), max_equality_residual=float("inf"),
            message="no conic solver available",
        )

        for position, solver in enumerate(self.solver_priority):
            if position > 0:
                self.fallback_count += 1
                logger.debug("conic fallback to %s", solver)
            try:
                problem.solve(solver=solver, verbose=self.config.verbose,
                              **self.config.solver_options(solver))
            except Exception as exc:
                logger.warning("conic solver %s failed: %s", solver, exc)
                last.message = f"{solver}: {exc}"
                continue

            self.solver_usage[solver] = self.solver_usage.get(solver, 0) + 1
            status = problem.status
            if status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
                return ConicSolution(
                    status=ConicStatus.INFEASIBLE, values={}, objective=float("inf"),
                    max_psd_violation=float("inf"), max_equality_residual=float("inf"),
                    solver=solver, message=status,
                )
            if status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
                last.message = f"{solver}: {status}"
                continue

            solution = self._collect(program, problem, solver)
            if solution.ok:
                return solution
            last = solution
            logger.warning("conic solver %s returned an unverified point (%s)", solver, solution.message)

        return last

    def _collect(self, program: ConicProgram, problem: cp.Problem, solver: str) -> ConicSolution:
        values = {name: _as_value(var) for name, var in program.variables.items()}
        psd_violation = 0.0
        for (_, block) in program.psd_blocks:
            M = _as_2d(block.value)
            M = 0.5 * (M + M.T)
            scale = max(1.0, float(np.abs(M).max()))
            psd_violation = max(psd_violation, max(0.0, -float(np.linalg.eigvalsh(M).min())) / scale)
        value_scale = max([1.0] + [float(np.max(np.abs(v), initial=0.0)) for v in values.values()])
        eq_residual = 0.0
        for _, expr in program.equalities:
            eq_residual = max(eq_residual, float(np.abs(_as_2d(expr.value)).max(initial=0.0)) / value_scale)

        duals, complementarity = {}, 0.0
        for (name, block), constraint in zip(program.psd_blocks, program._psd_constraints):
            if constraint.dual_value is not None:
                duals[name] = _as_2d(constraint.dual_value)
                slack = _as_2d(block.value)
                complementarity += abs(float(np.sum(duals[name] * 0.5 * (slack + slack.T))))

        tol = self.config.accept_tol
        verified = psd_violation <= tol and eq_residual <= tol
        return ConicSolution(
            status=ConicStatus.OPTIMAL if verified else ConicStatus.NUMERICAL_FAILURE,
            values=values,
            objective=float(problem.value),
            max_psd_violation=psd_violation,
            max_equality_residual=eq_residual,
            duals=duals,
            complementarity=complementarity,
            solver=solver,
            message=problem.status if verified else
            f"psd violation {psd_violation:.2e}, equality residual {eq_residual:.2e}",
        )


def _as_value(var: cp.Variable) -> np.ndarray:
    value = np.asarray(var.value, dtype=float)
    return float(value) if value.ndim == 0 else value


def solve_conic(program: ConicProgram, config: Optional[BackendConfig] = None) -> ConicSolution:
    """Solve with a fresh backend instance (no state shared between calls)."""
    return ConicBackend(config).solve(program)
