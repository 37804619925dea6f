"""
⚛️ Observation plans - instantaneous event sequences and continuous windows

Projectors entering an optimization are encoded as genotypes: 2·dim real genes
per event (Re/Im pairs in [−1, 1]) normalized to a unit vector ψ, P = |ψ⟩⟨ψ|.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .dynamics import (
    ContinuousObservation,
    InstantaneousEvent,
    PropagationConfig,
    propagate_many,
)
from .field import FieldSpec
from .models import SystemSpec
from .quantum import DensityMatrix, Projector


@dataclass
class InvalidGenotypeError(Exception):
    """Projector genes that do not decode to a valid projector"""

    message: str
    event_index: Optional[int] = None

    def __str__(self) -> str:
        return self.message


@dataclass(frozen=True)
class ObservationPlan:
    """Ordered instantaneous events plus continuous observation windows"""

    instantaneous: Tuple[InstantaneousEvent, ...] = ()
    continuous: Tuple[ContinuousObservation, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "instantaneous", tuple(self.instantaneous))
        object.__setattr__(self, "continuous", tuple(self.continuous))
        times = [e.time for e in self.instantaneous]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError(f"Observation times must be strictly increasing, got {times}")

    @classmethod
    def empty(cls) -> "ObservationPlan":
        return cls()

    @property
    def is_empty(self) -> bool:
        return not self.instantaneous and all(c.is_off for c in self.continuous)

    @property
    def times(self) -> List[float]:
        return [e.time for e in self.instantaneous]

    def validate(self, t_final: float) -> None:
        """Instantaneous times must lie strictly inside (0, T_f)"""
        for event in self.instantaneous:
            if not 0.0 < event.time < t_final:
                raise ValueError(f"Observation at t={event.time} outside (0, {t_final})")


@dataclass(frozen=True)
class ProjectorGenotype:
    """Raw genes for N rank-1 projectors in a dim-level system"""

    n_events: int
    dim: int
    genes: np.ndarray

    def __post_init__(self) -> None:
        genes = np.array(self.genes, dtype=float).ravel()
        if genes.size != self.n_genes(self.n_events, self.dim):
            raise InvalidGenotypeError(
                f"Expected {self.n_genes(self.n_events, self.dim)} genes for "
                f"{self.n_events} events in {self.dim} levels, got {genes.size}"
            )
        genes.setflags(write=False)
        object.__setattr__(self, "genes", genes)

    @staticmethod
    def n_genes(n_events: int, dim: int) -> int:
        return 2 * dim * n_events

    def vectors(self) -> np.ndarray:
        """Normalized complex vectors, one row per event"""
        return decode_vectors(self.genes[None, :], self.n_events, self.dim)[0]

    def decode(self) -> List[Projector]:
        return [Projector.from_vector(v, label=f"ψ{k + 1}") for k, v in enumerate(self.vectors())]


def decode_vectors(genes: np.ndarray, n_events: int, dim: int) -> np.ndarray:
    """(B, 2·dim·N) genes → (B, N, dim) unit vectors; zero-norm vectors are rejected"""
    raw = np.asarray(genes, dtype=float).reshape(genes.shape[0], n_events, dim, 2)
    vectors = raw[..., 0] + 1j * raw[..., 1]
    norms = np.linalg.norm(vectors, axis=-1)
    if np.any(norms == 0.0):
        member, event = np.argwhere(norms == 0.0)[0]
        raise InvalidGenotypeError(
            f"Projector {event + 1} of candidate {member} has a zero vector", event_index=int(event)
        )
    return vectors / norms[..., None]


def event_times(n_events: int, t_final: float) -> List[float]:
    """t_k = k·T_f/(N+1), k = 1..N"""
    return [k * t_final / (n_events + 1) for k in range(1, n_events + 1)]


def equally_spaced_plan(n_events: int, t_final: float, genotype: ProjectorGenotype) -> ObservationPlan:
    """N rank-1 projective observations at equally spaced times"""
    if n_events < 1:
        raise ValueError(f"An observation sequence needs N >= 1, got {n_events}")
    if genotype.n_events != n_events:
        raise InvalidGenotypeError(
            f"Genotype encodes {genotype.n_events} projectors, plan needs {n_events}"
        )
    events = tuple(
        InstantaneousEvent(time=t, operator=p)
        for t, p in zip(event_times(n_events, t_final), genotype.decode())
    )
    return ObservationPlan(instantaneous=events)


def apply_plan_yield(
    plan: ObservationPlan,
    system: SystemSpec,
    field: Optional[FieldSpec],
    target: Projector,
    config: Optional[PropagationConfig] = None,
    rho0: Optional[DensityMatrix] = None,
) -> float:
    """Tr[ρ(T_f) target] after propagating under field with plan"""
    return float(
        apply_plans_yield([plan], system, [field], target, config=config, rho0=rho0)[0]
    )


def apply_plans_yield(
    plans: Sequence[ObservationPlan],
    system: SystemSpec,
    fields: Sequence[Optional[FieldSpec]],
    target: Projector,
    config: Optional[PropagationConfig] = None,
    rho0: Optional[DensityMatrix] = None,
) -> np.ndarray:
    """Batch version of apply_plan_yield, one plan per field"""
    start = rho0 or system.initial_density()
    result = propagate_many(
        start.entries,
        system,
        fields,
        continuous=[plan.continuous for plan in plans],
        events=[plan.instantaneous for plan in plans],
        config=config,
    )
    return result.expectation(target.entries)
