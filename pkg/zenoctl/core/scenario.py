"""
📄 Scenario configuration - declarative YAML experiments validated with pydantic

A scenario binds a model (catalog name or inline system), a control field,
fixed and optimized observations, an objective and GA settings.
"""

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .constants import (
    AMPLITUDE_BOUNDS,
    DEFAULT_DT,
    DEFAULT_SAMPLE_EVERY,
    GAMMA_BOUNDS,
)
from .models import MODELS, SystemSpec, get_model
from .optimizer import CostKind, GAConfig
from .quantum import Observable

SCENARIO_DIR = Path(__file__).parent.parent / "data" / "scenarios"

TimeSpec = Union[float, Literal["mid"]]
Bounds = Tuple[float, float]


@dataclass
class ScenarioError(Exception):
    """Invalid or unreadable scenario configuration"""

    message: str
    path: Optional[str] = None

    def __str__(self) -> str:
        return f"{self.path}: {self.message}" if self.path else self.message


def _check_bounds(bounds: Optional[Bounds]) -> Optional[Bounds]:
    if bounds is None:
        return None
    lower, upper = bounds
    if not (math.isfinite(lower) and math.isfinite(upper)) or lower >= upper:
        raise ValueError(f"bounds must be finite with lower < upper, got {bounds}")
    return bounds


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class FieldConfig(_Section):
    """Control field family and which of its parameters are searched"""

    family: Literal["shaped", "rectangular", "none"] = "shaped"
    optimize: bool = True
    use_reference: bool = False  # the model's fixed reference field
    amplitudes: Optional[List[float]] = None
    phases: Optional[List[float]] = None
    amplitude_bounds: Bounds = AMPLITUDE_BOUNDS

    @field_validator("amplitude_bounds")
    @classmethod
    def check_amplitude_bounds(cls, value: Bounds) -> Bounds:
        return _check_bounds(value)  # type: ignore[return-value]

    @model_validator(mode="after")
    def check_fixed(self) -> "FieldConfig":
        if self.family == "none" and (self.optimize or self.use_reference):
            raise ValueError("a 'none' field cannot be optimized or use a reference field")
        if self.optimize and self.use_reference:
            raise ValueError("use_reference fixes the field; set optimize: false")
        return self


class InstantaneousConfig(_Section):
    """Fixed observation of an operator at one instant"""

    operator: str
    time: TimeSpec = "mid"


class SequenceConfig(_Section):
    """N optimized rank-1 projectors at t_k = k·T_f/(N+1)"""

    n_events: int = Field(ge=0)


class ContinuousConfig(_Section):
    """Continuous observation: constant κ, a fixed window, or an optimized window"""

    operator: str
    kappa: Optional[float] = Field(None, ge=0.0)
    window: Optional[Tuple[float, float, float]] = None
    optimize: bool = False
    gamma_bounds: Bounds = GAMMA_BOUNDS
    time_bounds: Optional[Bounds] = None

    @field_validator("gamma_bounds", "time_bounds")
    @classmethod
    def check_window_bounds(cls, value: Optional[Bounds]) -> Optional[Bounds]:
        return _check_bounds(value)

    @model_validator(mode="after")
    def check_mode(self) -> "ContinuousConfig":
        modes = sum([self.kappa is not None, self.window is not None, self.optimize])
        if modes != 1:
            raise ValueError("give exactly one of kappa, window or optimize: true")
        if self.gamma_bounds[0] < 0:
            raise ValueError("gamma_bounds must be non-negative")
        return self


class ObjectiveConfig(_Section):
    """Cost functional; target in percent, alpha defaults to the model's"""

    kind: CostKind = CostKind.FIELD
    target_percent: float = Field(100.0, ge=0.0, le=100.0)
    alpha: Optional[float] = Field(None, ge=0.0)
    target_state: Optional[str] = None


class PropagationSettings(_Section):
    dt: float = Field(DEFAULT_DT, gt=0.0)
    sample_every: int = Field(DEFAULT_SAMPLE_EVERY, ge=1)


class OutputConfig(_Section):
    directory: Optional[str] = None
    coherences: List[Tuple[int, int]] = Field(default_factory=list)
    field_dt: float = Field(0.1, gt=0.0)


class Scenario(_Section):
    """One declarative experiment"""

    name: str
    description: str = ""
    model: Optional[str] = None
    system: Optional[Dict[str, Any]] = None
    field: FieldConfig = Field(default_factory=FieldConfig)
    instantaneous: List[InstantaneousConfig] = Field(default_factory=list)
    sequence: Optional[SequenceConfig] = None
    continuous: List[ContinuousConfig] = Field(default_factory=list)
    objective: ObjectiveConfig = Field(default_factory=ObjectiveConfig)
    propagation: PropagationSettings = Field(default_factory=PropagationSettings)
    optimizer: GAConfig = Field(default_factory=GAConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)

    @model_validator(mode="after")
    def check_model(self) -> "Scenario":
        if (self.model is None) == (self.system is None):
            raise ValueError("give exactly one of 'model' or 'system'")
        if self.model is not None and self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; choose from {', '.join(MODELS)}")
        return self

    @property
    def is_optimized(self) -> bool:
        return (
            self.field.optimize
            or bool(self.sequence and self.sequence.n_events > 0)
            or any(c.optimize for c in self.continuous)
        )

    @property
    def has_observations(self) -> bool:
        return bool(
            self.instantaneous
            or (self.sequence and self.sequence.n_events > 0)
            or self.continuous
        )

    def build_system(self) -> SystemSpec:
        try:
            if self.model is not None:
                return get_model(self.model)
            assert self.system is not None
            return SystemSpec.from_config(self.system)
        except (IndexError, KeyError, TypeError, ValueError) as e:
            raise ScenarioError(f"invalid system: {e}") from e

    def event_time(self, time: TimeSpec, system: SystemSpec) -> float:
        return system.t_final / 2.0 if time == "mid" else float(time)

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON form"""
        data = self.model_dump(mode="json", exclude={"optimizer": {"workers"}})
        canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.model_dump(mode="json", exclude_none=True), sort_keys=False)

    @classmethod
    def from_dict(cls, data: Dict[str, Any], path: Optional[str] = None) -> "Scenario":
        try:
            return cls.model_validate(data)
        except ValidationError as e:
            raise ScenarioError(str(e), path) from e

    @classmethod
    def from_yaml(cls, path: Union[str, Path]) -> "Scenario":
        path = Path(path)
        try:
            data = yaml.safe_load(path.read_text())
        except (OSError, yaml.YAMLError) as e:
            raise ScenarioError(f"cannot read scenario: {e}", str(path)) from e
        if not isinstance(data, dict):
            raise ScenarioError("scenario must be a mapping", str(path))
        return cls.from_dict(data, str(path))


def list_bundled_scenarios() -> List[str]:
    return sorted(p.stem for p in SCENARIO_DIR.glob("*.yaml"))


def load_bundled_scenario(name: str) -> Scenario:
    path = SCENARIO_DIR / f"{name}.yaml"
    if not path.exists():
        raise ScenarioError(
            f"no bundled scenario {name!r}; available: {', '.join(list_bundled_scenarios())}"
        )
    return Scenario.from_yaml(path)


def load_scenario(reference: str) -> Scenario:
    """A YAML path, or the name of a bundled scenario"""
    path = Path(reference)
    if path.suffix in (".yaml", ".yml") or path.exists():
        return Scenario.from_yaml(path)
    return load_bundled_scenario(reference)


def resolve_operator(system: SystemSpec, name: str) -> Observable:
    """'mu', 'h0' or 'P<state>' (index or label, e.g. P1')"""
    key = name.strip()
    if key.lower() in ("mu", "μ", "dipole"):
        return system.mu
    if key.lower() in ("h0", "h₀", "hamiltonian"):
        return system.h0
    if key[:1] in ("P", "p") and len(key) > 1:
        try:
            return system.population_projector(system.state_index(key[1:]))
        except ValueError as e:
            raise ScenarioError(str(e)) from e
    raise ScenarioError(f"unknown operator {name!r}; use mu, h0 or P<state>")
