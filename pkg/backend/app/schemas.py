from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Type, TypeVar

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.control.ddpf import MetricsRow, SynthesisResult
from app.models import LtiSystem, PowerGridParams

Matrix = List[List[float]]
ModelT = TypeVar("ModelT", bound=BaseModel)


def to_matrix(M: Optional[np.ndarray]) -> Optional[Matrix]:
    if M is None:
        return None
    return np.atleast_2d(np.asarray(M, dtype=float)).tolist()


def from_matrix(rows: Optional[Matrix], cols: int = 0) -> Optional[np.ndarray]:
    if rows is None:
        return None
    if len(rows) == 0:
        return np.zeros((0, cols))
    return np.asarray(rows, dtype=float)


def check_shape(name: str, rows: Optional[Matrix], shape: Tuple[int, int]) -> None:
    """Raise ValueError unless ``rows`` is a rows x cols matrix (None passes)."""
    if rows is None:
        return
    if len(rows) != shape[0] or any(len(row) != shape[1] for row in rows):
        raise ValueError(f"{name} must be {shape[0]}x{shape[1]}")


# System Schemas
class PowerGridSchema(BaseModel):
    inertia: List[float]
    damping: List[float]
    susceptance: Dict[str, float]

    @classmethod
    def from_params(cls, params: PowerGridParams) -> "PowerGridSchema":
        return cls(
            inertia=list(params.inertia),
            damping=list(params.damping),
            susceptance={f"{i}-{j}": b for (i, j), b in sorted(params.susceptance.items())},
        )

    def to_params(self) -> PowerGridParams:
        susceptance = {}
        for key, value in self.susceptance.items():
            i, j = (int(bus) for bus in key.split("-"))
            susceptance[(i, j)] = value
        return PowerGridParams(tuple(self.inertia), tuple(self.damping), susceptance)


class SystemFile(BaseModel):
    model_config = ConfigDict(extra="forbid", ser_json_inf_nan="constants")

    name: str = "system"
    n: int = Field(ge=1)
    m: int = Field(ge=0)
    p: int = Field(ge=0)
    l: int = Field(ge=0)  # noqa: E741
    A: Matrix
    B: Matrix
    E: Matrix
    H: Matrix
    power_grid: Optional[PowerGridSchema] = None
    manifest: Optional[str] = None

    @model_validator(mode="after")
    def dimensions_match(self) -> "SystemFile":
        check_shape("A", self.A, (self.n, self.n))
        check_shape("B", self.B, (self.n, self.m))
        check_shape("E", self.E, (self.n, self.l))
        check_shape("H", self.H, (self.p, self.n))
        return self

    @classmethod
    def from_system(cls, sys: LtiSystem, params: Optional[PowerGridParams] = None) -> "SystemFile":
        return cls(
            name=sys.name,
            n=sys.n,
            m=sys.m,
            p=sys.p,
            l=sys.l,
            A=to_matrix(sys.A),
            B=to_matrix(sys.B),
            E=to_matrix(sys.E),
            H=to_matrix(sys.H),
            power_grid=PowerGridSchema.from_params(params) if params else None,
        )

    def to_system(self) -> LtiSystem:
        return LtiSystem(
            from_matrix(self.A, self.n),
            from_matrix(self.B, self.m),
            from_matrix(self.E, self.l),
            from_matrix(self.H, self.n),
            name=self.name,
        )


# Controller Schemas
class MetricsSchema(BaseModel):
    f_alpha: float
    f_gain: float
    f_h2: float
    f_dd: float
    hurwitz: bool

    model_config = ConfigDict(from_attributes=True, ser_json_inf_nan="constants")


class IterateSummary(BaseModel):
    alpha: float
    objective_value: float
    penalty: float
    dd_residual: float
    lyap_margin: float
    min_eig_p: float

    model_config = ConfigDict(from_attributes=True, ser_json_inf_nan="constants")


class ControllerFile(BaseModel):
    model_config = ConfigDict(extra="forbid", ser_json_inf_nan="constants")

    m: int = Field(ge=1)
    n: int = Field(ge=1)
    F: Matrix
    system: Optional[str] = None
    mode: Optional[str] = None
    X: Optional[Matrix] = None
    P: Optional[Matrix] = None
    alpha: Optional[float] = None
    iterations: int = 0
    converged: bool = True
    warning: Optional[str] = None
    kkt_residual: Optional[float] = None
    metrics: Optional[MetricsSchema] = None
    history: List[IterateSummary] = Field(default_factory=list)
    manifest: Optional[str] = None

    @field_validator("F")
    @classmethod
    def gain_not_empty(cls, value: Matrix) -> Matrix:
        if not value or not value[0]:
            raise ValueError("F must be a nonempty matrix")
        return value

    @model_validator(mode="after")
    def dimensions_match(self) -> "ControllerFile":
        check_shape("F", self.F, (self.m, self.n))
        check_shape("P", self.P, (self.n, self.n))
        if self.X is not None:
            check_shape("X", self.X, (len(self.X), len(self.X)))
        return self

    @classmethod
    def from_gain(cls, F: np.ndarray, system: Optional[str] = None) -> "ControllerFile":
        F = np.atleast_2d(np.asarray(F, dtype=float))
        return cls(m=F.shape[0], n=F.shape[1], F=to_matrix(F), system=system)

    @classmethod
    def from_result(cls, result: SynthesisResult, system: Optional[str] = None) -> "ControllerFile":
        history = [
            IterateSummary(
                alpha=it.alpha,
                objective_value=it.objective_value,
                penalty=it.penalty,
                dd_residual=it.dd_residual,
                lyap_margin=it.lyap_margin,
                min_eig_p=float(np.linalg.eigvalsh(0.5 * (it.P + it.P.T)).min()),
            )
            for it in result.trace
        ]
        m, n = np.atleast_2d(result.F).shape
        return cls(
            m=m,
            n=n,
            F=to_matrix(result.F),
            system=system,
            mode=result.mode,
            X=to_matrix(result.X),
            P=to_matrix(result.P),
            alpha=result.alpha,
            iterations=result.iterations,
            converged=result.converged,
            warning=result.warning,
            kkt_residual=result.kkt_residual,
            metrics=MetricsSchema.model_validate(result.metrics),
            history=history,
        )

    def gain(self) -> np.ndarray:
        return from_matrix(self.F)

    def metrics_row(self) -> Optional[MetricsRow]:
        return MetricsRow(**self.metrics.model_dump()) if self.metrics else None


# Manifest Schemas
class RunManifest(BaseModel):
    command: str
    parameters: Dict[str, Any] = Field(default_factory=dict)
    seed: Optional[int] = None
    tool_version: str
    started_at: datetime
    finished_at: Optional[datetime] = None
    inputs: Dict[str, str] = Field(default_factory=dict)
    outputs: Dict[str, str] = Field(default_factory=dict)

    def finish(self) -> "RunManifest":
        self.finished_at = datetime.now(timezone.utc)
        return self


def manifest_path(output: Path) -> Path:
    """Sidecar manifest next to an output file or inside an output directory."""
    output = Path(output)
    if output.is_dir():
        return output / "manifest.json"
    return output.with_name(output.name + ".manifest.json")


def read_model(cls: Type[ModelT], path: Path) -> ModelT:
    return cls.model_validate_json(Path(path).read_text())


def write_model(model: BaseModel, path: Path) -> Path:
    path = Path(path)
    path.write_text(model.model_dump_json(indent=2) + "\n")
    return path
