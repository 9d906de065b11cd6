"""
Domain model: the LTI plant, state-feedback controllers and the four-bus
power network used throughout the case studies.

    x' = A x + B u + E d,    z = H x,    u = F x
"""

from dataclasses import dataclass, field, replace
from typing import Dict, Tuple, Union

import numpy as np

from app.control.errors import DimensionMismatch
from app.control.linalg import as_matrix


@dataclass(frozen=True, eq=False)
class LtiSystem:
    """Plant (A, B, E, H) with n states, m inputs, l disturbances, p outputs."""
    A: np.ndarray
    B: np.ndarray
    E: np.ndarray
    H: np.ndarray
    name: str = "system"

    def __post_init__(self):
        for key in ("A", "B", "E", "H"):
            arr = as_matrix(getattr(self, key), key)
            arr.setflags(write=False)
            object.__setattr__(self, key, arr)
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise DimensionMismatch(f"A must be square, got {self.A.shape}")
        if self.B.shape[0] != n:
            raise DimensionMismatch(f"B must have {n} rows, got {self.B.shape}")
        if self.E.shape[0] != n:
            raise DimensionMismatch(f"E must have {n} rows, got {self.E.shape}")
        if self.H.shape[1] != n:
            raise DimensionMismatch(f"H must have {n} columns, got {self.H.shape}")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.H.shape[0]

    @property
    def l(self) -> int:
        return self.E.shape[1]

    def gain(self, F) -> np.ndarray:
        """Validate a gain against this plant and return it as an (m x n) array."""
        F = as_matrix(F.F if isinstance(F, Controller) else F, "F")
        if F.shape != (self.m, self.n):
            raise DimensionMismatch(f"F must be {self.m}x{self.n}, got {F.shape}")
        return F


@dataclass(frozen=True, eq=False)
class Controller:
    """State-feedback law u = F x."""
    F: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "F", as_matrix(self.F, "F"))


def closed_loop(sys: LtiSystem, ctrl: Union[Controller, np.ndarray]) -> np.ndarray:
    """A_F = A + B F.  Raises DimensionMismatch on a non-conformable gain."""
    F = sys.gain(ctrl)
    return sys.A + sys.B @ F


# =============================================================================
# ILLUSTRATIVE PLANTS
# =============================================================================

def example_system(which: int) -> LtiSystem:
    """
    Three-state illustrative plants with B = e2, E = e3, H = e1^T.

    1: DD holds open loop but the DD subspace carries an unstable mode.
    2: same plant with A's third column replaced by (0, 1, -1).
    """
    A = np.array([[0.0, 1.0, 0.0],
                  [-1.0, -1.0, 0.0],
                  [1.0, 0.0, 1.0]])
    if which == 2:
        A[:, 2] = [0.0, 1.0, -1.0]
    elif which != 1:
        raise ValueError(f"unknown example system {which}")
    B = np.array([[0.0], [1.0], [0.0]])
    E = np.array([[0.0], [0.0], [1.0]])
    H = np.array([[1.0, 0.0, 0.0]])
    return LtiSystem(A, B, E, H, name=f"example{which}")


# =============================================================================
# FOUR-BUS POWER NETWORK
# =============================================================================

LINES: Tuple[Tuple[int, int], ...] = ((1, 2), (2, 3), (3, 4), (4, 1))
NOMINAL_SUSCEPTANCE: Dict[Tuple[int, int], float] = {
    (1, 2): 0.386,
    (2, 3): 0.294,
    (3, 4): 0.596,
    (4, 1): 0.474,
}
INFINITE_BUS = 4
MIN_PARAMETER = 0.1


@dataclass(frozen=True)
class PowerGridParams:
    """Swing-equation parameters for buses 1..3 (bus 4 is the infinite bus)."""
    inertia: Tuple[float, float, float] = (10.0, 10.0, 10.0)
    damping: Tuple[float, float, float] = (10.0, 10.0, 10.0)
    susceptance: Dict[Tuple[int, int], float] = field(
        default_factory=lambda: dict(NOMINAL_SUSCEPTANCE)
    )

    def __post_init__(self):
        object.__setattr__(self, "inertia", tuple(float(v) for v in self.inertia))
        object.__setattr__(self, "damping", tuple(float(v) for v in self.damping))
        if len(self.inertia) != 3 or len(self.damping) != 3:
            raise DimensionMismatch("inertia and damping need one value per bus 1..3")
        if set(self.susceptance) != set(LINES):
            raise ValueError(f"susceptance must cover lines {LINES}")
        values = list(self.inertia) + list(self.damping) + list(self.susceptance.values())
        if not all(np.isfinite(v) and v > 0 for v in values):
            raise ValueError("power grid parameters must be strictly positive")


def grounded_laplacian(susceptance: Dict[Tuple[int, int], float]) -> np.ndarray:
    """Line-susceptance Laplacian of buses 1..3 with bus 4 grounded."""
    L = np.zeros((3, 3))
    for (i, j), b in susceptance.items():
        for bus in (i, j):
            if bus != INFINITE_BUS:
                L[bus - 1, bus - 1] += b
        if INFINITE_BUS not in (i, j):
            L[i - 1, j - 1] -= b
            L[j - 1, i - 1] -= b
    return L


def build_power_grid(params: PowerGridParams = PowerGridParams()) -> LtiSystem:
    """
    Linearized swing dynamics, state (theta_1..3, omega_1..3).

    A = [0 I; -M^-1 L  -M^-1 D],  B = [0; M^-1],  E = e6,  H = [I_2 0].
    """
    M_inv = np.diag(1.0 / np.asarray(params.inertia))
    D = np.diag(params.damping)
    L = grounded_laplacian(params.susceptance)

    A = np.block([[np.zeros((3, 3)), np.eye(3)],
                  [-M_inv @ L, -M_inv @ D]])
    B = np.vstack((np.zeros((3, 3)), M_inv))
    E = np.zeros((6, 1))
    E[5, 0] = 1.0
    H = np.hstack((np.eye(2), np.zeros((2, 4))))
    return LtiSystem(A, B, E, H, name="power_grid")


def _truncated_normal(rng: np.random.Generator, mean: float) -> float:
    # resample non-physical draws
    while True:
        draw = float(rng.normal(mean, 1.0))
        if draw > MIN_PARAMETER:
            return draw


def randomize_grid(params: PowerGridParams, seed: int) -> PowerGridParams:
    """Perturb inertia and damping with unit-variance Gaussian noise."""
    rng = np.random.default_rng(seed)
    inertia = tuple(_truncated_normal(rng, mean) for mean in params.inertia)
    damping = tuple(_truncated_normal(rng, mean) for mean in params.damping)
    return replace(params, inertia=inertia, damping=damping,
                   susceptance=dict(params.susceptance))
