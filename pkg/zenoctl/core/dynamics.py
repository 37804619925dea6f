"""
⚛️ Dynamics - master-equation propagation with instantaneous and continuous observations

dρ/dt = −i[H₀ − μE(t), ρ] − ½ Σ_m κ_m(t) [A_m, [A_m, ρ]]   (ħ = 1)

States are integrated with fixed-step RK4 in the frame rotating with the
diagonal H₀ (ρ̃_kj = ρ_kj e^{i(ε_k−ε_j)t}), where free evolution is exact and a
step without field or observation strength leaves ρ̃ unchanged. Whole batches of
members (one per GA individual) are integrated together.
"""

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .constants import DEFAULT_DT, DEFAULT_SAMPLE_EVERY, INTEGRATOR_POSITIVITY_TOL, NORM_TOL
from .field import FieldSpec
from .models import SystemSpec
from .quantum import (
    DensityMatrix,
    Observable,
    QuantumStateError,
    dephase,
    hermitize,
    measurement_projectors,
)

# Event times closer than this fraction of a step to a grid point sit on the grid
GRID_SNAP = 1e-6


def propagated_state(entries: np.ndarray) -> DensityMatrix:
    """Validated integrator output"""
    return DensityMatrix(entries, positivity_tol=INTEGRATOR_POSITIVITY_TOL)


@dataclass
class PropagationError(Exception):
    """Propagation could not be carried out"""

    message: str
    time: Optional[float] = None

    def __str__(self) -> str:
        if self.time is None:
            return self.message
        return f"{self.message} (t = {self.time:.6f} fs)"


@dataclass(frozen=True)
class PropagationConfig:
    """Time span and fixed step of one propagation"""

    t_start: float = 0.0
    t_end: float = 200.0
    dt: float = DEFAULT_DT
    method: str = "rk4"
    sample_every: int = DEFAULT_SAMPLE_EVERY

    def __post_init__(self) -> None:
        if not (math.isfinite(self.t_start) and math.isfinite(self.t_end)):
            raise PropagationError("Propagation span must be finite")
        if self.t_end <= self.t_start:
            raise PropagationError(
                f"t_end ({self.t_end}) must be greater than t_start ({self.t_start})"
            )
        if not self.dt > 0:
            raise PropagationError(f"Step size must be positive, got {self.dt}")
        if self.method != "rk4":
            raise PropagationError(f"Unsupported integration method {self.method!r}")
        if self.sample_every < 1:
            raise PropagationError("sample_every must be at least 1")

    @classmethod
    def for_system(
        cls, system: SystemSpec, dt: float = DEFAULT_DT, sample_every: int = DEFAULT_SAMPLE_EVERY
    ) -> "PropagationConfig":
        return cls(t_start=0.0, t_end=system.t_final, dt=dt, sample_every=sample_every)

    @property
    def n_steps(self) -> int:
        return max(1, int(round((self.t_end - self.t_start) / self.dt)))

    @property
    def step(self) -> float:
        """Effective step, span / n_steps"""
        return (self.t_end - self.t_start) / self.n_steps

    def grid(self) -> np.ndarray:
        return self.t_start + self.step * np.arange(self.n_steps + 1)


@dataclass(frozen=True)
class ContinuousObservation:
    """Persistent observation of operator with piecewise-constant strength windows"""

    operator: Observable
    windows: Tuple[Tuple[float, float, float], ...]  # (T1, T2, γ)

    def __post_init__(self) -> None:
        windows = tuple((float(t1), float(t2), float(g)) for t1, t2, g in self.windows)
        for t1, t2, gamma in windows:
            if not t1 < t2:
                raise PropagationError(f"Observation window needs T1 < T2, got ({t1}, {t2})")
            if not math.isfinite(gamma) or gamma < 0:
                raise PropagationError(f"Observation strength must be finite and >= 0, got {gamma}")
        object.__setattr__(self, "windows", windows)

    @classmethod
    def constant(cls, operator: Observable, kappa: float) -> "ContinuousObservation":
        return cls(operator=operator, windows=((-math.inf, math.inf, kappa),))

    @classmethod
    def window(cls, operator: Observable, t1: float, t2: float, gamma: float) -> "ContinuousObservation":
        return cls(operator=operator, windows=((t1, t2, gamma),))

    @property
    def is_off(self) -> bool:
        return all(g == 0.0 for _, _, g in self.windows)

    def strength_at(self, t: float) -> float:
        """κ(t), summing overlapping windows"""
        return float(sum(g for t1, t2, g in self.windows if t1 <= t < t2))

    def step_strengths(self, config: PropagationConfig) -> np.ndarray:
        """κ per integration step with window edges snapped to the step grid"""
        n, h = config.n_steps, config.step
        kappa = np.zeros(n)
        for t1, t2, gamma in self.windows:
            first = int(round(float(np.clip((t1 - config.t_start) / h, 0, n))))
            last = int(round(float(np.clip((t2 - config.t_start) / h, 0, n))))
            kappa[first:last] += gamma
        return kappa


@dataclass(frozen=True)
class InstantaneousEvent:
    """Projective observation of operator at a single instant"""

    time: float
    operator: Observable


@dataclass
class Trajectory:
    """Sampled lab-frame density matrices"""

    times: np.ndarray
    states: np.ndarray  # (T, n, n)
    labels: Tuple[str, ...] = ()

    @property
    def populations(self) -> np.ndarray:
        return np.real(np.diagonal(self.states, axis1=-2, axis2=-1))

    @property
    def final(self) -> DensityMatrix:
        return propagated_state(self.states[-1])

    def density(self, index: int) -> DensityMatrix:
        return propagated_state(self.states[index])

    def to_csv(self, path: Path, coherences: Sequence[Tuple[int, int]] = ()) -> Path:
        """Columns t, p_<state>..., re_rho_i_j, im_rho_i_j"""
        dim = self.states.shape[-1]
        labels = self.labels or tuple(str(k) for k in range(dim))
        header = ["t"] + [f"p_{label}" for label in labels]
        for i, j in coherences:
            header += [f"re_rho_{i}_{j}", f"im_rho_{i}_{j}"]

        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(header)
            pops = self.populations
            for k, t in enumerate(self.times):
                row = [f"{t:.6f}"] + [f"{p:.10f}" for p in pops[k]]
                for i, j in coherences:
                    value = self.states[k, i, j]
                    row += [f"{value.real:.10e}", f"{value.imag:.10e}"]
                writer.writerow(row)
        return path


@dataclass
class WavefunctionTrajectory:
    """Sampled lab-frame amplitudes C_k(t)"""

    times: np.ndarray
    amplitudes: np.ndarray  # (T, n)

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @property
    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.amplitudes, axis=-1)

    @property
    def final(self) -> np.ndarray:
        return self.amplitudes[-1]


@dataclass
class BatchPropagation:
    """Final states of a propagated batch plus optional records"""

    final_states: np.ndarray  # (B, n, n), lab frame
    pre_event_states: Dict[float, np.ndarray] = field(default_factory=dict)
    trajectories: Optional[List[Trajectory]] = None

    def expectation(self, operator: np.ndarray) -> np.ndarray:
        """Re Tr(ρ_b A) per member"""
        return np.real(np.einsum("bij,ji->b", self.final_states, operator))


def _phase_matrix(energies: np.ndarray, t: float) -> np.ndarray:
    """R_kj(t) = e^{i(ε_k − ε_j)t}"""
    phases = np.exp(1j * energies * t)
    return phases[:, None] * phases.conj()[None, :]


def _sample_fields(fields: Sequence[Optional[FieldSpec]], times: np.ndarray) -> np.ndarray:
    values = np.zeros((len(fields), len(times)))
    for b, f in enumerate(fields):
        if f is not None and not f.is_zero:
            values[b] = f.evaluate(times)
    if not np.all(np.isfinite(values)):
        bad = int(np.argmax(~np.all(np.isfinite(values), axis=0)))
        raise PropagationError("Control field is not finite", time=float(times[bad]))
    return values


def _check_dim(operator: Observable, dim: int, what: str) -> None:
    if operator.dim != dim:
        raise QuantumStateError(
            f"Dimension mismatch: {what} is {operator.dim}x{operator.dim}, system is {dim}x{dim}",
            "dimension",
        )


class _EventSchedule:
    """Event times shared by the batch, one padded projector stack per layer"""

    def __init__(
        self,
        events: Sequence[Sequence[InstantaneousEvent]],
        dim: int,
        config: PropagationConfig,
    ):
        batch = len(events)
        times: List[float] = []
        for member in events:
            for event in member:
                _check_dim(event.operator, dim, "event operator")
                if not config.t_start <= event.time <= config.t_end:
                    raise PropagationError(
                        f"Observation time outside [{config.t_start}, {config.t_end}]",
                        time=event.time,
                    )
                if not any(abs(event.time - t) <= 1e-12 for t in times):
                    times.append(float(event.time))
        self.times = sorted(times)

        cache: Dict[int, List[np.ndarray]] = {}
        identity = np.eye(dim, dtype=complex)
        self.layers: Dict[float, List[np.ndarray]] = {}
        for t in self.times:
            per_member = [
                [e.operator for e in member if abs(e.time - t) <= 1e-12] for member in events
            ]
            depth = max(len(ops) for ops in per_member)
            stacks = []
            for layer in range(depth):
                groups = []
                for ops in per_member:
                    if layer < len(ops):
                        op = ops[layer]
                        if id(op) not in cache:
                            cache[id(op)] = measurement_projectors(op)
                        groups.append(cache[id(op)])
                    else:
                        groups.append([identity])
                width = max(len(g) for g in groups)
                stack = np.zeros((batch, width, dim, dim), dtype=complex)
                for b, g in enumerate(groups):
                    stack[b, : len(g)] = g
                stacks.append(stack)
            self.layers[t] = stacks

        # Events on a grid point fire after that step, others split their step
        h = config.step
        self.on_grid: Dict[int, List[float]] = {}
        self.inside: Dict[int, List[float]] = {}
        for t in self.times:
            u = (t - config.t_start) / h
            k = int(round(u))
            if abs(u - k) <= GRID_SNAP:
                self.on_grid.setdefault(k, []).append(t)
            else:
                self.inside.setdefault(int(math.floor(u)), []).append(t)

    def apply(self, rho: np.ndarray, t: float, phases: np.ndarray) -> np.ndarray:
        for stack in self.layers[t]:
            rho = dephase(rho, stack * phases)
        return rho


class _Dissipators:
    """Per-step observation strengths, diagonal operators folded into rate matrices"""

    def __init__(
        self,
        continuous: Sequence[Sequence[ContinuousObservation]],
        dim: int,
        config: PropagationConfig,
    ):
        batch, n_steps = len(continuous), config.n_steps
        slots = max((len(member) for member in continuous), default=0)
        self.rates: List[Tuple[np.ndarray, np.ndarray]] = []  # (W (B,n,n), κ (B,steps))
        self.general: List[Tuple[np.ndarray, np.ndarray]] = []  # (A (B,n,n), κ (B,steps))

        for slot in range(slots):
            operators = np.zeros((batch, dim, dim), dtype=complex)
            kappa = np.zeros((batch, n_steps))
            diagonal = True
            for b, member in enumerate(continuous):
                if slot >= len(member):
                    continue
                obs = member[slot]
                _check_dim(obs.operator, dim, "observed operator")
                operators[b] = obs.operator.entries
                kappa[b] = obs.step_strengths(config)
                diagonal = diagonal and obs.operator.is_diagonal
            if not np.any(kappa):
                continue
            if diagonal:
                a = np.real(np.diagonal(operators, axis1=-2, axis2=-1))
                self.rates.append(((a[:, :, None] - a[:, None, :]) ** 2, kappa))
            else:
                self.general.append((operators, kappa))

        active = np.zeros(n_steps, dtype=bool)
        for _, kappa in self.rates + self.general:
            active |= np.any(kappa != 0.0, axis=0)
        self.active = active

    def damping(self, step: int) -> Optional[np.ndarray]:
        """½ Σ κ_l (a_k − a_j)² for the diagonal slots at one step"""
        total: Optional[np.ndarray] = None
        for weights, kappa in self.rates:
            k = kappa[:, step]
            if not np.any(k):
                continue
            term = 0.5 * k[:, None, None] * weights
            total = term if total is None else total + term
        return total

    def general_at(self, step: int) -> List[Tuple[np.ndarray, np.ndarray]]:
        return [(ops, kappa[:, step]) for ops, kappa in self.general if np.any(kappa[:, step])]


def _derivative(
    rho: np.ndarray,
    mu: np.ndarray,
    phases: np.ndarray,
    e: np.ndarray,
    damping: Optional[np.ndarray],
    general: List[Tuple[np.ndarray, np.ndarray]],
) -> np.ndarray:
    """Rotating-frame right-hand side iE[μ̃, ρ̃] − ½Σκ[Ã,[Ã,ρ̃]]"""
    mu_t = mu * phases
    out = (1j * e)[:, None, None] * (mu_t @ rho - rho @ mu_t)
    if damping is not None:
        out = out - damping * rho
    for operators, kappa in general:
        a_t = operators * phases
        inner = a_t @ rho - rho @ a_t
        out = out - 0.5 * kappa[:, None, None] * (a_t @ inner - inner @ a_t)
    return out


def _rk4_step(
    rho: np.ndarray,
    h: float,
    mu: np.ndarray,
    phases: Tuple[np.ndarray, np.ndarray, np.ndarray],
    e: Tuple[np.ndarray, np.ndarray, np.ndarray],
    damping: Optional[np.ndarray],
    general: List[Tuple[np.ndarray, np.ndarray]],
) -> np.ndarray:
    k1 = _derivative(rho, mu, phases[0], e[0], damping, general)
    k2 = _derivative(rho + 0.5 * h * k1, mu, phases[1], e[1], damping, general)
    k3 = _derivative(rho + 0.5 * h * k2, mu, phases[1], e[1], damping, general)
    k4 = _derivative(rho + h * k3, mu, phases[2], e[2], damping, general)
    return hermitize(rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))


def propagate_many(
    rho0: np.ndarray,
    system: SystemSpec,
    fields: Sequence[Optional[FieldSpec]],
    continuous: Optional[Sequence[Sequence[ContinuousObservation]]] = None,
    events: Optional[Sequence[Sequence[InstantaneousEvent]]] = None,
    config: Optional[PropagationConfig] = None,
    record: bool = False,
) -> BatchPropagation:
    """Propagate one member per field; rho0 is shared (n, n) or per member (B, n, n)"""
    config = config or PropagationConfig.for_system(system)
    dim, batch = system.dim, len(fields)
    if batch == 0:
        raise PropagationError("Nothing to propagate: empty batch")
    continuous = continuous if continuous is not None else [()] * batch
    events = events if events is not None else [()] * batch
    if len(continuous) != batch or len(events) != batch:
        raise PropagationError("Fields, observations and events must have one entry per member")

    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape[-2:] != (dim, dim):
        raise QuantumStateError(
            f"Dimension mismatch: state is {rho0.shape[-2:]}, system is {dim}x{dim}", "dimension"
        )
    rho = np.array(np.broadcast_to(rho0, (batch, dim, dim)))

    energies = np.asarray(system.energies)
    mu = system.dipole.astype(complex)
    n, h, t0 = config.n_steps, config.step, config.t_start

    schedule = _EventSchedule(events, dim, config)
    dissipators = _Dissipators(continuous, dim, config)
    half_grid = t0 + 0.5 * h * np.arange(2 * n + 1)
    e_grid = _sample_fields(fields, half_grid)
    field_active = np.any(e_grid[:, :-1:2] != 0, axis=0)
    field_active |= np.any(e_grid[:, 1::2] != 0, axis=0)
    field_active |= np.any(e_grid[:, 2::2] != 0, axis=0)
    active = field_active | dissipators.active

    def to_lab(state: np.ndarray, t: float) -> np.ndarray:
        return hermitize(state * _phase_matrix(energies, t).conj())

    pre_event: Dict[float, np.ndarray] = {}

    def fire(state: np.ndarray, t: float) -> np.ndarray:
        phases = _phase_matrix(energies, t)
        pre_event[t] = hermitize(state * phases.conj())
        return schedule.apply(state, t, phases)

    rho = rho * _phase_matrix(energies, t0)
    for t in schedule.on_grid.get(0, []):
        rho = fire(rho, t)

    sample_times: List[float] = []
    samples: List[np.ndarray] = []
    if record:
        sample_times.append(t0)
        samples.append(to_lab(rho, t0))

    for i in range(n):
        t_i = t0 + i * h
        inside = schedule.inside.get(i)
        if inside:
            damping = dissipators.damping(i)
            general = dissipators.general_at(i)
            edges = [t_i] + inside + [t_i + h]
            for k, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
                mid = 0.5 * (a + b)
                values = _sample_fields(fields, np.array([a, mid, b]))
                rho = _rk4_step(
                    rho,
                    b - a,
                    mu,
                    (
                        _phase_matrix(energies, a),
                        _phase_matrix(energies, mid),
                        _phase_matrix(energies, b),
                    ),
                    (values[:, 0], values[:, 1], values[:, 2]),
                    damping,
                    general,
                )
                if k < len(inside):
                    rho = fire(rho, inside[k])
        elif active[i]:
            rho = _rk4_step(
                rho,
                h,
                mu,
                (
                    _phase_matrix(energies, t_i),
                    _phase_matrix(energies, t_i + 0.5 * h),
                    _phase_matrix(energies, t_i + h),
                ),
                (e_grid[:, 2 * i], e_grid[:, 2 * i + 1], e_grid[:, 2 * i + 2]),
                dissipators.damping(i),
                dissipators.general_at(i),
            )

        for t in schedule.on_grid.get(i + 1, []):
            rho = fire(rho, t)

        if record and ((i + 1) % config.sample_every == 0 or i + 1 == n):
            t_next = t0 + (i + 1) * h
            sample_times.append(t_next)
            samples.append(to_lab(rho, t_next))

    final = to_lab(rho, config.t_end)
    trajectories = None
    if record:
        stacked = np.stack(samples, axis=1)  # (B, T, n, n)
        times = np.array(sample_times)
        trajectories = [
            Trajectory(times=times, states=stacked[b], labels=system.state_labels)
            for b in range(batch)
        ]
    return BatchPropagation(final_states=final, pre_event_states=pre_event, trajectories=trajectories)


def propagate(
    rho0: DensityMatrix,
    system: SystemSpec,
    field_spec: Optional[FieldSpec],
    continuous: Sequence[ContinuousObservation] = (),
    events: Sequence[InstantaneousEvent] = (),
    config: Optional[PropagationConfig] = None,
) -> Tuple[DensityMatrix, Trajectory]:
    """Single-member propagation returning the final state and its sampled trajectory"""
    if rho0.dim != system.dim:
        raise QuantumStateError(
            f"Dimension mismatch: state is {rho0.dim}x{rho0.dim}, system is {system.dim}x{system.dim}",
            "dimension",
        )
    batch = propagate_many(
        rho0.entries,
        system,
        [field_spec],
        continuous=[tuple(continuous)],
        events=[tuple(events)],
        config=config,
        record=True,
    )
    assert batch.trajectories is not None
    return propagated_state(batch.final_states[0]), batch.trajectories[0]


def propagate_pure(
    state0: Sequence[complex],
    system: SystemSpec,
    field_spec: Optional[FieldSpec],
    config: Optional[PropagationConfig] = None,
) -> WavefunctionTrajectory:
    """Integrate iĊ = H(t)C (unitary path only)"""
    config = config or PropagationConfig.for_system(system)
    psi = np.asarray(state0, dtype=complex).ravel()
    if psi.shape != (system.dim,):
        raise QuantumStateError(
            f"Dimension mismatch: state has {psi.size} amplitudes, system has {system.dim} levels",
            "dimension",
        )
    norm = float(np.linalg.norm(psi))
    if abs(norm - 1.0) > NORM_TOL:
        raise QuantumStateError(f"State vector norm is {norm:.12f}, expected 1", "norm")

    energies = np.asarray(system.energies)
    mu = system.dipole.astype(complex)
    n, h, t0 = config.n_steps, config.step, config.t_start
    e_grid = _sample_fields([field_spec], t0 + 0.5 * h * np.arange(2 * n + 1))[0]

    def derivative(c: np.ndarray, t: float, e: float) -> np.ndarray:
        return 1j * e * ((mu * _phase_matrix(energies, t)) @ c)

    c = psi * np.exp(1j * energies * t0)
    times = [t0]
    amplitudes = [psi.copy()]
    for i in range(n):
        t_i = t0 + i * h
        e0, e_mid, e1 = e_grid[2 * i], e_grid[2 * i + 1], e_grid[2 * i + 2]
        if e0 != 0.0 or e_mid != 0.0 or e1 != 0.0:
            k1 = derivative(c, t_i, e0)
            k2 = derivative(c + 0.5 * h * k1, t_i + 0.5 * h, e_mid)
            k3 = derivative(c + 0.5 * h * k2, t_i + 0.5 * h, e_mid)
            k4 = derivative(c + h * k3, t_i + h, e1)
            c = c + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if (i + 1) % config.sample_every == 0 or i + 1 == n:
            t_next = t0 + (i + 1) * h
            times.append(t_next)
            amplitudes.append(c * np.exp(-1j * energies * t_next))

    return WavefunctionTrajectory(times=np.array(times), amplitudes=np.array(amplitudes))
