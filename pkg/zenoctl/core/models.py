"""
⚛️ Model catalog - the multilevel systems used in the control experiments

Each SystemSpec carries the field-free energies (H₀ = Σ ε_v |v⟩⟨v|), the
dipole operator μ, the resonant transition frequencies, initial/target states
and the control settings (T_f, σ, α) for its experiments.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .field import FieldSpec, RectangularField, ShapedField
from .quantum import DensityMatrix, HermitianOperator, Projector

TRANSITION_TOL = 1e-9


@dataclass(frozen=True)
class SystemSpec:
    """Field-free Hamiltonian, dipole and control settings of one model"""

    name: str
    energies: Tuple[float, ...]  # rad/fs
    dipole: np.ndarray  # real symmetric
    transition_frequencies: Tuple[float, ...]  # rad/fs
    initial_state: int
    target_state: int
    t_final: float  # fs
    alpha: float
    sigma: Optional[float] = None  # fs, for Gaussian-windowed fields
    field_family: str = "shaped"
    state_labels: Tuple[str, ...] = ()
    reference_field: Optional[FieldSpec] = None
    dipole_unit: str = "1e-30 C m"
    description: str = ""

    def __post_init__(self) -> None:
        energies = tuple(float(e) for e in self.energies)
        dipole = np.array(self.dipole, dtype=float)
        dim = len(energies)
        if not all(math.isfinite(e) for e in energies) or not np.all(np.isfinite(dipole)):
            raise ValueError(f"{self.name}: energies and dipole must be finite")
        if dipole.shape != (dim, dim):
            raise ValueError(f"{self.name}: dipole shape {dipole.shape} does not match {dim} levels")
        if not np.array_equal(dipole, dipole.T):
            raise ValueError(f"{self.name}: dipole must be symmetric")
        for index in (self.initial_state, self.target_state):
            if not 0 <= index < dim:
                raise ValueError(f"{self.name}: state index {index} outside {dim} levels")

        coupled = {
            abs(energies[a] - energies[b])
            for a in range(dim)
            for b in range(a + 1, dim)
            if dipole[a, b] != 0.0
        }
        for omega in self.transition_frequencies:
            if not any(abs(omega - gap) <= TRANSITION_TOL for gap in coupled):
                raise ValueError(
                    f"{self.name}: transition frequency {omega} matches no dipole-coupled pair"
                )

        dipole.setflags(write=False)
        object.__setattr__(self, "energies", energies)
        object.__setattr__(self, "dipole", dipole)
        object.__setattr__(
            self, "transition_frequencies", tuple(float(w) for w in self.transition_frequencies)
        )
        if not self.state_labels:
            object.__setattr__(self, "state_labels", tuple(str(i) for i in range(dim)))

    @property
    def dim(self) -> int:
        return len(self.energies)

    @property
    def h0(self) -> HermitianOperator:
        return HermitianOperator.diagonal(self.energies, label="H0")

    @property
    def mu(self) -> HermitianOperator:
        return HermitianOperator(self.dipole, label="mu")

    def state_index(self, label: str) -> int:
        """Resolve a state label (e.g. "1'") or a plain index string"""
        if label in self.state_labels:
            return self.state_labels.index(label)
        try:
            index = int(label)
        except ValueError as e:
            raise ValueError(f"{self.name} has no state {label!r}") from e
        if not 0 <= index < self.dim:
            raise ValueError(f"{self.name} has no state {label!r}")
        return index

    def initial_density(self) -> DensityMatrix:
        return DensityMatrix.basis(self.dim, self.initial_state)

    def population_projector(self, index: int) -> Projector:
        return Projector.basis(self.dim, index, label=f"P{self.state_labels[index]}")

    def target_projector(self) -> Projector:
        return self.population_projector(self.target_state)

    def to_config(self) -> Dict[str, Any]:
        """Config fragment accepted by from_config and scenario `system:` sections"""
        couplings = [
            [a, b, float(self.dipole[a, b])]
            for a in range(self.dim)
            for b in range(a + 1, self.dim)
            if self.dipole[a, b] != 0.0
        ]
        config: Dict[str, Any] = {
            "name": self.name,
            "energies": list(self.energies),
            "couplings": couplings,
            "transition_frequencies": list(self.transition_frequencies),
            "initial_state": self.initial_state,
            "target_state": self.target_state,
            "t_final": self.t_final,
            "alpha": self.alpha,
            "field_family": self.field_family,
            "state_labels": list(self.state_labels),
            "dipole_unit": self.dipole_unit,
        }
        if self.sigma is not None:
            config["sigma"] = self.sigma
        if self.description:
            config["description"] = self.description
        return config

    @classmethod
    def from_config(cls, config: Dict[str, Any]) -> "SystemSpec":
        energies = [float(e) for e in config["energies"]]
        dim = len(energies)
        dipole = np.zeros((dim, dim))
        for a, b, value in config.get("couplings", []):
            dipole[int(a), int(b)] = dipole[int(b), int(a)] = float(value)
        return cls(
            name=str(config.get("name", "custom")),
            energies=tuple(energies),
            dipole=dipole,
            transition_frequencies=tuple(config.get("transition_frequencies", ())),
            initial_state=int(config.get("initial_state", 0)),
            target_state=int(config.get("target_state", dim - 1)),
            t_final=float(config["t_final"]),
            alpha=float(config.get("alpha", 0.0)),
            sigma=config.get("sigma"),
            field_family=str(config.get("field_family", "shaped")),
            state_labels=tuple(config.get("state_labels", ())),
            dipole_unit=str(config.get("dipole_unit", "1e-30 C m")),
            description=str(config.get("description", "")),
        )


def _ladder_dipole(couplings: Sequence[Tuple[int, int, float]], dim: int) -> np.ndarray:
    dipole = np.zeros((dim, dim))
    for a, b, value in couplings:
        dipole[a, b] = dipole[b, a] = value
    return dipole


MODEL1_TRANSITIONS = (1.511, 1.181, 0.761, 0.553)
MODEL1_DIPOLES = (0.5855, 0.7079, 0.8352, 0.9281)
MODEL2_FIXED_AMPLITUDE = 0.07


def model1() -> SystemSpec:
    """Five-level ladder, |0⟩ → |4⟩ by nearest-neighbour transitions"""
    energies = tuple(float(e) for e in np.concatenate([[0.0], np.cumsum(MODEL1_TRANSITIONS)]))
    dipole = _ladder_dipole([(k, k + 1, m) for k, m in enumerate(MODEL1_DIPOLES)], 5)
    return SystemSpec(
        name="model1",
        energies=energies,
        dipole=dipole,
        transition_frequencies=MODEL1_TRANSITIONS,
        initial_state=0,
        target_state=4,
        t_final=200.0,
        sigma=30.0,
        alpha=0.05,
        description="Five-level ladder; field fights or cooperates with one observation",
    )


def model2_reference_field(t_final: float = 200.0, sigma: float = 30.0) -> ShapedField:
    """The fixed, non-optimal field: every amplitude 0.07, every phase 0"""
    n = len(MODEL1_TRANSITIONS)
    return ShapedField.from_arrays(
        [MODEL2_FIXED_AMPLITUDE] * n, MODEL1_TRANSITIONS, [0.0] * n, sigma, t_final
    )


def model2() -> SystemSpec:
    """Model-1 structure driven by optimized projector sequences"""
    base = model1()
    return SystemSpec(
        name="model2",
        energies=base.energies,
        dipole=base.dipole,
        transition_frequencies=base.transition_frequencies,
        initial_state=0,
        target_state=4,
        t_final=200.0,
        sigma=30.0,
        alpha=0.0,
        reference_field=model2_reference_field(),
        description="Model-1 Hamiltonian; optimized sequences of projective observations",
    )


def model3() -> SystemSpec:
    """Symmetric three-level system, coherent yield of |1⟩ capped at 50%"""
    return SystemSpec(
        name="model3",
        energies=(1.0, 2.0, 3.0),
        dipole=np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]]),
        transition_frequencies=(1.0,),
        initial_state=0,
        target_state=1,
        t_final=200.0,
        alpha=0.01,
        field_family="rectangular",
        description="High-symmetry three-level system; observations break the dynamical symmetry",
    )


def model4() -> SystemSpec:
    """Five states {0, 1, 1', 2, 3}; population leaks into |1'⟩ via a degenerate transition"""
    labels = ("0", "1", "1'", "2", "3")
    dipole = _ladder_dipole([(0, 1, 0.13), (1, 3, 0.15), (3, 4, 0.23), (1, 2, 0.21)], 5)
    return SystemSpec(
        name="model4",
        energies=(0.0, 3.3, 4.1, 5.9, 6.7),
        dipole=dipole,
        transition_frequencies=(3.3, 2.6, 0.8),
        initial_state=0,
        target_state=4,
        t_final=200.0,
        sigma=30.0,
        alpha=0.01,
        state_labels=labels,
        description="Lock-avoidance: continuous observation of |1'⟩ suppresses the loss channel",
    )


MODELS: Dict[str, Callable[[], SystemSpec]] = {
    "model1": model1,
    "model2": model2,
    "model3": model3,
    "model4": model4,
}


def get_model(name: str) -> SystemSpec:
    """Look up a catalog model by name"""
    try:
        return MODELS[name]()
    except KeyError as e:
        raise ValueError(f"Unknown model {name!r}; choose from {', '.join(MODELS)}") from e


def list_models() -> List[SystemSpec]:
    return [factory() for factory in MODELS.values()]


def symmetry_invariant(amplitudes: Sequence[complex]) -> float:
    """|C₀C₂ − C₁²/2|, conserved by coherent model-3 dynamics"""
    c = np.asarray(amplitudes, dtype=complex)
    return float(abs(c[0] * c[2] - c[1] ** 2 / 2.0))


def symmetry_residual(rho: DensityMatrix) -> float:
    """ρ₀₀ρ₂₂ − ρ₁₁²/4, zero on coherent model-3 trajectories from |0⟩"""
    p = rho.populations
    return float(p[0] * p[2] - p[1] ** 2 / 4.0)


@dataclass
class BoundCheck:
    """Outcome of the coherent-control bound check"""

    holds: bool
    residual: float
    target_population: float
    violations: List[str] = field(default_factory=list)


def coherent_bound_check(rho: DensityMatrix, tol: float = 1e-6) -> bool:
    """True when ρ₀₀ρ₂₂ = ρ₁₁²/4 and ρ₁₁ ≤ 1/2 hold within tol"""
    return check_coherent_bound(rho, tol).holds


def check_coherent_bound(rho: DensityMatrix, tol: float = 1e-6) -> BoundCheck:
    residual = symmetry_residual(rho)
    p1 = rho.population(1)
    violations = []
    if abs(residual) > tol:
        violations.append(f"ρ00ρ22 − ρ11²/4 = {residual:.3e}")
    if p1 > 0.5 + tol:
        violations.append(f"ρ11 = {p1:.6f} exceeds 1/2")
    return BoundCheck(
        holds=not violations, residual=residual, target_population=p1, violations=violations
    )


def rectangular_field(system: SystemSpec, amplitude: float) -> RectangularField:
    """Resonant rectangular pulse for a model with a single carrier frequency"""
    carrier = system.transition_frequencies[0] if system.transition_frequencies else 1.0
    return RectangularField(amplitude=amplitude, t_final=system.t_final, carrier=carrier)


def shaped_field(system: SystemSpec, amplitudes: Sequence[float], phases: Sequence[float]) -> ShapedField:
    """Gaussian-windowed field on the model's resonant frequencies"""
    if system.sigma is None:
        raise ValueError(f"{system.name} has no envelope width for shaped fields")
    return ShapedField.from_arrays(
        amplitudes, system.transition_frequencies, phases, system.sigma, system.t_final
    )
