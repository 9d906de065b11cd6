"""
==============================================================================
DDSYNTH - SETTINGS
==============================================================================

Solver tolerances, algorithm parameters and execution options.

Precedence: defaults < DDSYNTH_* environment (and .env) < --config FILE < CLI flags.
==============================================================================
"""

import json
from pathlib import Path
from typing import Any, List, Optional

from dotenv import load_dotenv
from pydantic import Field, PositiveFloat, PositiveInt, ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from app.control.conic import BackendConfig
from app.control.ddpf import SolveConfig
from app.control.executor import ExecutorConfig
from app.control.linalg import Tolerance

# Load environment variables from .env file
load_dotenv()


class ConfigError(ValueError):
    """Invalid configuration file or value"""


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="DDSYNTH_", extra="forbid")

    # Tolerances
    rank_tol: PositiveFloat = 1e-9
    residual_tol: PositiveFloat = 1e-8
    psd_tol: PositiveFloat = 1e-8

    # Conic backend
    conic_solvers: List[str] = Field(default_factory=lambda: ["CLARABEL", "SCS"])
    conic_max_iters: PositiveInt = 500
    conic_feas_tol: PositiveFloat = 1e-9
    conic_accept_tol: PositiveFloat = 1e-6
    conic_verbose: bool = False

    # H2 SDP
    sdp_eps: PositiveFloat = 1e-4
    sdp_delta: PositiveFloat = 1e-6

    # DDPF
    gamma: PositiveFloat = 1e-1
    stop_eps: PositiveFloat = 1e-8
    max_iters: PositiveInt = 200
    delta: PositiveFloat = 1e-6
    margin_tol: PositiveFloat = 1e-7
    stability_eps: PositiveFloat = 1e-6
    alpha_cap: PositiveFloat = 1.0
    lyap_eta: PositiveFloat = 1e-3
    lmi_backoff: float = Field(1e-6, ge=0)
    gamma_growth: float = Field(10.0, gt=1)
    max_retries: int = Field(3, ge=0)

    # Initialization
    init_starts: int = Field(20, ge=0)
    init_step: PositiveFloat = 1.0
    init_shrink: float = Field(0.5, gt=0, lt=1)
    init_floor: PositiveFloat = 1e-6
    init_budget: PositiveInt = 5000
    init_margin: PositiveFloat = 0.1

    # Simulation / metrics
    sim_dt: PositiveFloat = 1e-2
    h2_horizon: PositiveFloat = 50.0
    h2_dt: PositiveFloat = 1e-3

    # Execution
    workers: int = 1
    log_level: str = "INFO"

    def tolerance(self) -> Tolerance:
        return Tolerance(self.rank_tol, self.residual_tol, self.psd_tol)

    def backend_config(self) -> BackendConfig:
        return BackendConfig(
            solvers=[s.upper() for s in self.conic_solvers],
            max_iters=self.conic_max_iters,
            feas_tol=self.conic_feas_tol,
            accept_tol=self.conic_accept_tol,
            verbose=self.conic_verbose,
        )

    def solve_config(self) -> SolveConfig:
        return SolveConfig(
            gamma=self.gamma,
            stop_eps=self.stop_eps,
            max_iters=self.max_iters,
            delta=self.delta,
            margin_tol=self.margin_tol,
            alpha_cap=self.alpha_cap,
            lyap_eta=self.lyap_eta,
            lmi_backoff=self.lmi_backoff,
            gamma_growth=self.gamma_growth,
            max_retries=self.max_retries,
            init_starts=self.init_starts,
            init_step=self.init_step,
            init_shrink=self.init_shrink,
            init_floor=self.init_floor,
            init_budget=self.init_budget,
            init_margin=self.init_margin,
        )

    def executor_config(self) -> ExecutorConfig:
        return ExecutorConfig(
            tol=self.tolerance(),
            backend=self.backend_config(),
            solve=self.solve_config(),
            sdp_eps=self.sdp_eps,
            sdp_delta=self.sdp_delta,
            stability_eps=self.stability_eps,
            h2_horizon=self.h2_horizon,
            h2_dt=self.h2_dt,
        )


def load_settings(config_file: Optional[Path] = None, **overrides: Any) -> Settings:
    """
    Build settings from the environment, an optional JSON file and explicit
    overrides (None values are ignored).
    """
    values = {}
    if config_file is not None:
        try:
            values = json.loads(Path(config_file).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {config_file}: {exc}") from exc
        if not isinstance(values, dict):
            raise ConfigError(f"config file {config_file} must hold a JSON object")
    values.update({key: value for key, value in overrides.items() if value is not None})
    try:
        return Settings(**values)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc
