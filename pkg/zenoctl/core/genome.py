"""
🧬 Genome layout - maps a scenario's free parameters onto GA genes

Genes are laid out as [field | projector sequence | continuous windows]:
shaped fields contribute A_l then θ_l (periodic), rectangular fields A,
each sequence event 2·dim Re/Im genes, each optimized window (γ, T₁, T₂).
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .constants import PHASE_BOUNDS, PROJECTOR_GENE_BOUNDS
from .dynamics import ContinuousObservation, InstantaneousEvent, PropagationConfig, propagate_many
from .field import FieldSpec
from .models import SystemSpec, rectangular_field, shaped_field
from .observation import ObservationPlan, decode_vectors, event_times
from .optimizer import GeneSpace
from .quantum import Observable, Projector
from .scenario import Scenario, ScenarioError, resolve_operator


@dataclass(frozen=True)
class Candidate:
    """Decoded genotype: a field (None for no field) and an observation plan"""

    field: Optional[FieldSpec]
    plan: ObservationPlan

    @property
    def fluence(self) -> float:
        return 0.0 if self.field is None else self.field.fluence()


@dataclass(frozen=True)
class _Window:
    operator: Observable
    genes: slice


class GenomeLayout:
    """Gene space plus the fixed parts of a scenario"""

    def __init__(self, scenario: Scenario, system: SystemSpec):
        self.system = system
        self.family = scenario.field.family
        genes: List[Tuple[str, float, float, bool]] = []

        self.fixed_field: Optional[FieldSpec] = None
        self.field_genes = slice(0, 0)
        if scenario.field.optimize:
            lower, upper = scenario.field.amplitude_bounds
            if self.family == "rectangular":
                genes.append(("A", lower, upper, False))
            else:
                if system.sigma is None or not system.transition_frequencies:
                    raise ScenarioError(f"{system.name} cannot carry a shaped field")
                count = len(system.transition_frequencies)
                genes += [(f"A{k + 1}", lower, upper, False) for k in range(count)]
                genes += [(f"theta{k + 1}", *PHASE_BOUNDS, True) for k in range(count)]
            self.field_genes = slice(0, len(genes))
        else:
            self.fixed_field = self._fixed_field(scenario, system)

        self.fixed_events = [
            InstantaneousEvent(
                time=scenario.event_time(e.time, system), operator=resolve_operator(system, e.operator)
            )
            for e in scenario.instantaneous
        ]
        for event in self.fixed_events:
            if not 0.0 < event.time < system.t_final:
                raise ScenarioError(f"observation time {event.time} outside (0, {system.t_final})")

        self.n_events = scenario.sequence.n_events if scenario.sequence else 0
        start = len(genes)
        g_low, g_high = PROJECTOR_GENE_BOUNDS
        for k in range(self.n_events):
            for j in range(system.dim):
                genes.append((f"psi{k + 1}_re{j}", g_low, g_high, False))
                genes.append((f"psi{k + 1}_im{j}", g_low, g_high, False))
        self.sequence_genes = slice(start, len(genes))
        self.sequence_times = event_times(self.n_events, system.t_final)
        times = sorted([e.time for e in self.fixed_events] + self.sequence_times)
        for earlier, later in zip(times, times[1:]):
            if later <= earlier:
                raise ScenarioError(
                    f"two observations at t={later}; fixed times must avoid the sequence times {self.sequence_times}"
                )

        self.fixed_continuous: List[ContinuousObservation] = []
        self.windows: List[_Window] = []
        for c in scenario.continuous:
            operator = resolve_operator(system, c.operator)
            if c.kappa is not None:
                self.fixed_continuous.append(ContinuousObservation.constant(operator, c.kappa))
            elif c.window is not None:
                self.fixed_continuous.append(ContinuousObservation.window(operator, *c.window))
            else:
                t_low, t_high = c.time_bounds or (0.0, system.t_final)
                start = len(genes)
                label = c.operator
                genes.append((f"gamma_{label}", c.gamma_bounds[0], c.gamma_bounds[1], False))
                genes.append((f"T1_{label}", t_low, t_high, False))
                genes.append((f"T2_{label}", t_low, t_high, False))
                self.windows.append(_Window(operator=operator, genes=slice(start, len(genes))))

        self.space: Optional[GeneSpace] = GeneSpace.build(genes) if genes else None

    @staticmethod
    def _fixed_field(scenario: Scenario, system: SystemSpec) -> Optional[FieldSpec]:
        config = scenario.field
        if config.family == "none":
            return None
        if config.use_reference:
            if system.reference_field is None:
                raise ScenarioError(f"{system.name} has no reference field")
            return system.reference_field
        if config.family == "rectangular":
            if not config.amplitudes:
                raise ScenarioError("a fixed rectangular field needs amplitudes: [A]")
            return rectangular_field(system, config.amplitudes[0])
        count = len(system.transition_frequencies)
        amplitudes = config.amplitudes or []
        phases = config.phases or [0.0] * count
        if len(amplitudes) != count or len(phases) != count:
            raise ScenarioError(f"a fixed shaped field for {system.name} needs {count} amplitudes and phases")
        try:
            return shaped_field(system, amplitudes, phases)
        except ValueError as e:
            raise ScenarioError(str(e)) from e

    @property
    def size(self) -> int:
        return 0 if self.space is None else self.space.size

    @property
    def names(self) -> Tuple[str, ...]:
        return () if self.space is None else self.space.names

    def parameters(self, genes: np.ndarray) -> Dict[str, float]:
        return {name: float(value) for name, value in zip(self.names, genes)}

    def decode_field(self, genes: np.ndarray) -> Optional[FieldSpec]:
        if self.field_genes.stop == 0:
            return self.fixed_field
        values = genes[self.field_genes]
        if self.family == "rectangular":
            return rectangular_field(self.system, float(values[0]))
        half = len(values) // 2
        return shaped_field(self.system, values[:half], values[half:])

    def decode_projectors(self, genes: np.ndarray) -> List[Projector]:
        if self.n_events == 0:
            return []
        vectors = decode_vectors(genes[None, self.sequence_genes], self.n_events, self.system.dim)[0]
        return [Projector.from_vector(v, label=f"ψ{k + 1}") for k, v in enumerate(vectors)]

    def decode_continuous(self, genes: np.ndarray) -> List[ContinuousObservation]:
        observations = list(self.fixed_continuous)
        for window in self.windows:
            gamma, t1, t2 = genes[window.genes]
            t1, t2 = sorted((float(t1), float(t2)))
            if t2 > t1 and gamma > 0:
                observations.append(ContinuousObservation.window(window.operator, t1, t2, float(gamma)))
        return observations

    def decode(self, genes: Optional[np.ndarray] = None) -> Candidate:
        genes = np.zeros(self.size) if genes is None else np.asarray(genes, dtype=float)
        events = list(self.fixed_events)
        events += [
            InstantaneousEvent(time=t, operator=p)
            for t, p in zip(self.sequence_times, self.decode_projectors(genes))
        ]
        events.sort(key=lambda e: e.time)
        plan = ObservationPlan(instantaneous=tuple(events), continuous=tuple(self.decode_continuous(genes)))
        return Candidate(field=self.decode_field(genes), plan=plan)


class ScenarioEvaluator:
    """Batch evaluator genes (B, G) → (yields, fluences); picklable for worker processes"""

    def __init__(self, layout: GenomeLayout, config: PropagationConfig, target: Projector):
        self.layout = layout
        self.config = config
        self.target = target
        self.rho0 = layout.system.initial_density().entries

    def __call__(self, genes: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        candidates = [self.layout.decode(row) for row in np.atleast_2d(genes)]
        result = propagate_many(
            self.rho0,
            self.layout.system,
            [c.field for c in candidates],
            continuous=[c.plan.continuous for c in candidates],
            events=[c.plan.instantaneous for c in candidates],
            config=self.config,
        )
        fluences = np.array([c.fluence for c in candidates])
        return result.expectation(self.target.entries), fluences
