"""
⚛️ Control fields - Gaussian-windowed multi-cosine and rectangular resonant pulses

E(t) = s(t) Σ A_l cos(ω_l t + θ_l) with s(t) = exp[−(t − T_f/2)² / 2σ²],
or E(t) = A cos(t) on [0, T_f]. Fluence is the sum of squared amplitudes.
"""

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np

TimeLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class FieldComponent:
    """Single spectral line of a shaped field"""

    amplitude: float
    frequency: float  # rad/fs
    phase: float = 0.0  # rad, wrapped to [0, 2π)

    def __post_init__(self) -> None:
        if self.amplitude < 0 or not math.isfinite(self.amplitude):
            raise ValueError(f"Field amplitude must be finite and >= 0, got {self.amplitude}")
        object.__setattr__(self, "phase", float(self.phase) % (2.0 * math.pi))


@dataclass(frozen=True)
class ShapedField:
    """Gaussian-enveloped sum of resonant cosines"""

    components: Tuple[FieldComponent, ...]
    sigma: float  # fs
    t_final: float  # fs

    def __post_init__(self) -> None:
        if self.sigma <= 0:
            raise ValueError(f"Envelope width must be positive, got {self.sigma}")
        object.__setattr__(self, "components", tuple(self.components))

    @classmethod
    def from_arrays(
        cls,
        amplitudes: Sequence[float],
        frequencies: Sequence[float],
        phases: Sequence[float],
        sigma: float,
        t_final: float,
    ) -> "ShapedField":
        if not len(amplitudes) == len(frequencies) == len(phases):
            raise ValueError("amplitudes, frequencies and phases must have equal length")
        components = tuple(
            FieldComponent(float(a), float(w), float(th))
            for a, w, th in zip(amplitudes, frequencies, phases)
        )
        return cls(components=components, sigma=sigma, t_final=t_final)

    @classmethod
    def zero(cls, t_final: float, sigma: float = 1.0) -> "ShapedField":
        return cls(components=(), sigma=sigma, t_final=t_final)

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([c.amplitude for c in self.components], dtype=float)

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([c.frequency for c in self.components], dtype=float)

    @property
    def phases(self) -> np.ndarray:
        return np.array([c.phase for c in self.components], dtype=float)

    @property
    def is_zero(self) -> bool:
        return all(c.amplitude == 0.0 for c in self.components)

    def envelope(self, t: TimeLike) -> TimeLike:
        return np.exp(-((np.asarray(t) - self.t_final / 2.0) ** 2) / (2.0 * self.sigma**2))

    def evaluate(self, t: TimeLike) -> TimeLike:
        times = np.asarray(t, dtype=float)
        carrier = np.zeros_like(times)
        for c in self.components:
            carrier = carrier + c.amplitude * np.cos(c.frequency * times + c.phase)
        values = self.envelope(times) * carrier
        return float(values) if values.ndim == 0 else values

    def fluence(self) -> float:
        return float(sum(c.amplitude**2 for c in self.components))

    def power_spectrum(self) -> List[Tuple[float, float]]:
        """(ω_l, A_l²) per component"""
        return [(c.frequency, c.amplitude**2) for c in self.components]


@dataclass(frozen=True)
class RectangularField:
    """A cos(ω_c t) on [0, T_f], zero elsewhere"""

    amplitude: float
    t_final: float
    carrier: float = 1.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.amplitude):
            raise ValueError(f"Field amplitude must be finite, got {self.amplitude}")

    @property
    def is_zero(self) -> bool:
        return self.amplitude == 0.0

    def evaluate(self, t: TimeLike) -> TimeLike:
        times = np.asarray(t, dtype=float)
        inside = (times >= 0.0) & (times <= self.t_final)
        values = np.where(inside, self.amplitude * np.cos(self.carrier * times), 0.0)
        return float(values) if values.ndim == 0 else values

    def fluence(self) -> float:
        return float(self.amplitude**2)

    def power_spectrum(self) -> List[Tuple[float, float]]:
        return [(self.carrier, self.amplitude**2)]


FieldSpec = Union[ShapedField, RectangularField]


def evaluate(field: FieldSpec, t: TimeLike) -> TimeLike:
    """E(t) for either field family"""
    return field.evaluate(t)


def fluence(field: FieldSpec) -> float:
    """Σ A_l² (shaped) or A² (rectangular)"""
    return field.fluence()


def sample(field: FieldSpec, t_start: float, t_end: float, dt: float) -> Tuple[np.ndarray, np.ndarray]:
    """Sample E(t) on a regular grid including both end points"""
    n_steps = max(1, int(round((t_end - t_start) / dt)))
    times = np.linspace(t_start, t_end, n_steps + 1)
    return times, np.asarray(field.evaluate(times), dtype=float)


def write_field_csv(field: FieldSpec, path: Path, dt: float = 0.1, t_start: float = 0.0) -> Path:
    """Export (t, E(t)) samples for plotting"""
    times, values = sample(field, t_start, field.t_final, dt)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["t", "E"])
        for t, e in zip(times, values):
            writer.writerow([f"{t:.6f}", f"{e:.10e}"])
    return path


def write_spectrum_csv(field: FieldSpec, path: Path) -> Path:
    """Export per-component power spectrum (ω_l, A_l²)"""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["omega", "power"])
        for omega, power in field.power_spectrum():
            writer.writerow([f"{omega:.6f}", f"{power:.10e}"])
    return path
