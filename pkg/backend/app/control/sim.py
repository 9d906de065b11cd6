"""
==============================================================================
DDSYNTH - CLOSED-LOOP SIMULATION
==============================================================================

Time-domain evaluation of u = F x under disturbances:
- Exact zero-order-hold discretization by augmented matrix exponential
- Disturbance-free twin trajectory and DD error e(t) = z_dd(t) - z(t)
- Cumulative error integral (trapezoid rule)
- Noise sweeps over variance 2^l with common random numbers
- Output-energy bound check

Disturbances are piecewise constant per step with i.i.d. N(0, sigma^2) samples.

Author: DDSynth Team
==============================================================================
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy.integrate import cumulative_trapezoid, trapezoid

from app.control.errors import PreconditionViolation
from app.control.h2 import hankel_singular_values, observability_gramian
from app.control.linalg import DEFAULT_TOL, Tolerance, expm, is_hurwitz

if TYPE_CHECKING:
    from app.models import LtiSystem

logger = logging.getLogger(__name__)

DEFAULT_DT = 1e-2
SWEEP_LEVELS = range(7, 21)
ENERGY_SLACK = 0.05


class DisturbanceKind(str, Enum):
    GAUSSIAN_WHITE = "gaussian_white"
    ZERO = "zero"
    CUSTOM = "custom"


@dataclass(frozen=True, eq=False)
class DisturbanceSpec:
    """
    Disturbance realization on the simulation grid.

    GaussianWhite draws one N(0, sigma_sq) sample per step and channel from
    numpy's default generator seeded with ``seed``. Custom holds the samples
    directly, one row per step.
    """
    kind: DisturbanceKind
    sigma_sq: float = 0.0
    seed: int = 0
    samples: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.sigma_sq < 0:
            raise ValueError("sigma_sq must be nonnegative")
        if self.kind == DisturbanceKind.CUSTOM and self.samples is None:
            raise ValueError("custom disturbance needs samples")

    @classmethod
    def gaussian(cls, sigma_sq: float, seed: int) -> "DisturbanceSpec":
        return cls(DisturbanceKind.GAUSSIAN_WHITE, sigma_sq=sigma_sq, seed=seed)

    @classmethod
    def zero(cls) -> "DisturbanceSpec":
        return cls(DisturbanceKind.ZERO)

    @classmethod
    def custom(cls, samples) -> "DisturbanceSpec":
        return cls(DisturbanceKind.CUSTOM, samples=np.asarray(samples, dtype=float))

    def realize(self, steps: int, channels: int) -> np.ndarray:
        """(steps x channels) held values d_k on [t_k, t_k+1)."""
        if self.kind == DisturbanceKind.ZERO:
            return np.zeros((steps, channels))
        if self.kind == DisturbanceKind.GAUSSIAN_WHITE:
            rng = np.random.default_rng(self.seed)
            return rng.normal(0.0, np.sqrt(self.sigma_sq), size=(steps, channels))
        samples = np.asarray(self.samples, dtype=float).reshape(len(self.samples), -1)
        if samples.shape[0] < steps or samples.shape[1] != channels:
            raise ValueError(f"custom disturbance needs at least {steps} rows of {channels} channels, "
                             f"got {samples.shape}")
        return samples[:steps]


@dataclass(frozen=True, eq=False)
class SimulationTrace:
    """Trajectories sampled on tgrid (rows are time instants)."""
    tgrid: np.ndarray
    x: np.ndarray
    z: np.ndarray
    x_dd: np.ndarray
    z_dd: np.ndarray
    d: np.ndarray
    e: np.ndarray
    e_cum: np.ndarray

    @property
    def e_norm(self) -> np.ndarray:
        return np.linalg.norm(self.e, axis=1)

    def to_frame(self) -> pd.DataFrame:
        """Columns t, x_1..x_n, z_1..z_p, zdd_1..zdd_p, e_norm, e_cum."""
        columns = {"t": self.tgrid}
        columns.update({f"x_{i + 1}": self.x[:, i] for i in range(self.x.shape[1])})
        columns.update({f"z_{i + 1}": self.z[:, i] for i in range(self.z.shape[1])})
        columns.update({f"zdd_{i + 1}": self.z_dd[:, i] for i in range(self.z_dd.shape[1])})
        columns["e_norm"] = self.e_norm
        columns["e_cum"] = self.e_cum
        return pd.DataFrame(columns)


# =============================================================================
# DISCRETIZATION AND SIMULATION
# =============================================================================

def zoh_discretize(Acl: np.ndarray, E: np.ndarray, dt: float) -> Tuple[np.ndarray, np.ndarray]:
    """Ad = expm(Acl dt), Bd = int_0^dt expm(Acl s) ds E, from one augmented exponential."""
    n, l = E.shape
    augmented = np.zeros((n + l, n + l))
    augmented[:n, :n] = Acl
    augmented[:n, n:] = E
    phi = expm(augmented * dt)
    return phi[:n, :n], phi[:n, n:]


def _grid(T: float, dt: float) -> Tuple[int, float]:
    if T <= 0 or dt <= 0 or dt > T:
        raise ValueError(f"need T > 0 and 0 < dt <= T, got T={T}, dt={dt}")
    steps = max(1, int(round(T / dt)))
    return steps, T / steps


def simulate(sys: LtiSystem, F: np.ndarray, x0, dist: DisturbanceSpec, T: float,
             dt: float = DEFAULT_DT) -> SimulationTrace:
    """
    Closed loop x' = (A + B F) x + E d under a zero-order-hold disturbance.

    The disturbed state is the twin trajectory plus the zero-initial-state
    disturbance response, so a zero disturbance gives e = 0 exactly.
    """
    F = sys.gain(F)
    steps, h = _grid(T, dt)
    x0 = np.asarray(x0, dtype=float).ravel()
    if x0.shape != (sys.n,):
        raise ValueError(f"x0 must have {sys.n} entries, got {x0.shape}")
    Ad, Bd = zoh_discretize(sys.A + sys.B @ F, sys.E, h)
    d = dist.realize(steps, sys.l)

    x_dd = np.zeros((steps + 1, sys.n))
    x_d = np.zeros((steps + 1, sys.n))
    x_dd[0] = x0
    for k in range(steps):
        x_dd[k + 1] = Ad @ x_dd[k]
        x_d[k + 1] = Ad @ x_d[k] + Bd @ d[k]

    x = x_dd + x_d
    z = x @ sys.H.T
    z_dd = x_dd @ sys.H.T
    e = z_dd - z
    tgrid = np.linspace(0.0, steps * h, steps + 1)
    e_cum = cumulative_trapezoid(np.linalg.norm(e, axis=1), tgrid, initial=0.0)
    return SimulationTrace(
        tgrid=tgrid, x=x, z=z, x_dd=x_dd, z_dd=z_dd,
        d=np.vstack((d, d[-1:])), e=e, e_cum=e_cum,
    )


# =============================================================================
# NOISE SWEEP
# =============================================================================

def sweep_seed(seed: int, trial: int, level: int) -> int:
    """Per-(trial, level) seed shared by every controller."""
    return int(np.random.SeedSequence([seed, trial, level]).generate_state(1)[0])


def _sweep_cell(sys: LtiSystem, controller_id: str, F: np.ndarray, x0, level: int, trial: int,
                seed: int, T: float, dt: float) -> dict:
    dist = DisturbanceSpec.gaussian(2.0 ** level, sweep_seed(seed, trial, level))
    trace = simulate(sys, F, x0, dist, T, dt)
    return {"controller_id": controller_id, "l": level, "trial": trial, "e_cum_T": float(trace.e_cum[-1])}


def noise_sweep(sys: LtiSystem, controllers: Sequence[Tuple[str, np.ndarray]], x0,
                levels: Iterable[int] = SWEEP_LEVELS, T: float = 10.0, trials: int = 1, seed: int = 0,
                dt: float = DEFAULT_DT, workers: int = 1) -> pd.DataFrame:
    """
    e_cum(T) for every controller, level l (variance 2^l) and trial.

    Rows come back ordered by controller, level and trial whatever the
    scheduling, and the disturbance of a (trial, level) cell is the same for
    every controller.
    """
    levels = list(levels)
    cells = [(cid, F, level, trial) for cid, F in controllers for level in levels for trial in range(trials)]
    logger.info("noise sweep: %d controllers x %d levels x %d trials", len(controllers), len(levels), trials)
    rows: List[dict] = Parallel(n_jobs=workers)(
        delayed(_sweep_cell)(sys, cid, F, x0, level, trial, seed, T, dt) for cid, F, level, trial in cells
    )
    return pd.DataFrame(rows, columns=["controller_id", "l", "trial", "e_cum_T"])


# =============================================================================
# ENERGY BOUND
# =============================================================================

@dataclass(frozen=True)
class EnergyReport:
    """
    empirical: output energy on [0, T] from x(0) = 0
    bound: (2 sum of Hankel singular values)^2 * M_d
    gramian_bound: ||W_o||_2^2 * M_d, reported alongside
    """
    empirical: float
    disturbance_energy: float
    bound: float
    gramian_bound: float
    within_bound: bool


def energy_bound_check(sys: LtiSystem, F: np.ndarray, dist: DisturbanceSpec, T: float,
                       dt: float = DEFAULT_DT, tol: Tolerance = DEFAULT_TOL) -> EnergyReport:
    """
    Compare the empirical output energy with the Hankel-norm bound.

    Raises:
        PreconditionViolation: A + B F is not Hurwitz
    """
    F = sys.gain(F)
    Acl = sys.A + sys.B @ F
    if not is_hurwitz(Acl):
        raise PreconditionViolation("energy bound needs a Hurwitz closed loop")
    trace = simulate(sys, F, np.zeros(sys.n), dist, T, dt)
    h = trace.tgrid[1] - trace.tgrid[0]
    empirical = float(trapezoid(np.sum(trace.z ** 2, axis=1), trace.tgrid))
    disturbance_energy = float(np.sum(trace.d[:-1] ** 2) * h)

    hankel = hankel_singular_values(Acl, sys.E, sys.H, tol)
    bound = float((2.0 * hankel.sum()) ** 2 * disturbance_energy)
    gramian_bound = float(np.linalg.norm(observability_gramian(Acl, sys.H, tol), 2) ** 2 * disturbance_energy)
    return EnergyReport(
        empirical=empirical,
        disturbance_energy=disturbance_energy,
        bound=bound,
        gramian_bound=gramian_bound,
        within_bound=empirical <= bound * (1 + ENERGY_SLACK) + tol.residual_tol,
    )
