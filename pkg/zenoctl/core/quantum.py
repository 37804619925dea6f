"""
⚛️ Quantum core - density matrices, observables and instantaneous observations

Dense complex matrices expressed in the eigenbasis of the field-free
Hamiltonian, and the projective measurement maps applied at a single instant:
the single-projector "kick" and full dephasing in an observable's eigenbasis.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .constants import (
    DEFAULT_DEGENERACY_TOL,
    HERMITIAN_TOL,
    IDEMPOTENCY_TOL,
    NORM_TOL,
    POSITIVITY_TOL,
    TRACE_TOL,
)


@dataclass
class QuantumStateError(Exception):
    """Invalid quantum state, operator or dimension mismatch"""

    message: str
    kind: str = "invalid"

    def __str__(self) -> str:
        return self.message


def _as_matrix(entries: object, name: str) -> np.ndarray:
    """Copy entries into a read-only complex square matrix"""
    matrix = np.array(entries, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] == 0:
        raise QuantumStateError(
            f"{name} must be a non-empty square matrix, got shape {matrix.shape}", "shape"
        )
    matrix.setflags(write=False)
    return matrix


def hermitian_residual(matrix: np.ndarray) -> float:
    """Largest entrywise deviation from Hermiticity"""
    return float(np.max(np.abs(matrix - matrix.conj().swapaxes(-1, -2))))


def hermitize(matrix: np.ndarray) -> np.ndarray:
    """(M + M†)/2 over the last two axes"""
    return 0.5 * (matrix + matrix.conj().swapaxes(-1, -2))


@dataclass(frozen=True)
class HermitianOperator:
    """Observable A with real spectrum (dipole, field-free Hamiltonian, ...)"""

    entries: np.ndarray
    label: str = ""

    def __post_init__(self) -> None:
        matrix = _as_matrix(self.entries, f"operator {self.label or ''}".strip())
        residual = hermitian_residual(matrix)
        if residual > HERMITIAN_TOL:
            raise QuantumStateError(
                f"Operator {self.label or '?'} is not Hermitian (residual {residual:.3e})",
                "non_hermitian",
            )
        object.__setattr__(self, "entries", matrix)

    @property
    def dim(self) -> int:
        return int(self.entries.shape[0])

    @classmethod
    def diagonal(cls, values: Sequence[float], label: str = "") -> "HermitianOperator":
        return cls(np.diag(np.asarray(values, dtype=float)), label=label)

    @property
    def is_diagonal(self) -> bool:
        """Whether the operator is diagonal in the field-free eigenbasis"""
        off = self.entries - np.diag(np.diag(self.entries))
        return bool(np.max(np.abs(off)) == 0.0)


@dataclass(frozen=True)
class Projector:
    """Idempotent Hermitian operator, rank-1 |ψ⟩⟨ψ| when built from a vector"""

    entries: np.ndarray
    vector: Optional[np.ndarray] = None
    label: str = ""

    def __post_init__(self) -> None:
        matrix = _as_matrix(self.entries, f"projector {self.label or ''}".strip())
        if hermitian_residual(matrix) > HERMITIAN_TOL:
            raise QuantumStateError(f"Projector {self.label or '?'} is not Hermitian", "non_hermitian")
        idempotency = float(np.max(np.abs(matrix @ matrix - matrix)))
        if idempotency > IDEMPOTENCY_TOL:
            raise QuantumStateError(
                f"Projector {self.label or '?'} is not idempotent (‖P²−P‖ = {idempotency:.3e})",
                "non_idempotent",
            )
        object.__setattr__(self, "entries", matrix)
        if self.vector is not None:
            vector = np.array(self.vector, dtype=complex)
            vector.setflags(write=False)
            object.__setattr__(self, "vector", vector)

    @property
    def dim(self) -> int:
        return int(self.entries.shape[0])

    @property
    def rank(self) -> int:
        return int(round(float(np.real(np.trace(self.entries)))))

    @property
    def is_diagonal(self) -> bool:
        off = self.entries - np.diag(np.diag(self.entries))
        return bool(np.max(np.abs(off)) == 0.0)

    def complement(self) -> np.ndarray:
        """1 − P"""
        return np.eye(self.dim, dtype=complex) - self.entries

    @classmethod
    def from_vector(cls, vector: Sequence[complex], label: str = "") -> "Projector":
        """Rank-1 projector onto a normalized copy of vector"""
        psi = np.asarray(vector, dtype=complex).ravel()
        norm = float(np.linalg.norm(psi))
        if norm == 0.0 or not np.isfinite(norm):
            raise QuantumStateError("Cannot build a projector from a zero vector", "zero_norm")
        psi = psi / norm
        return cls(np.outer(psi, psi.conj()), vector=psi, label=label)

    @classmethod
    def basis(cls, dim: int, index: int, label: Optional[str] = None) -> "Projector":
        """Population projector |k⟩⟨k|"""
        if not 0 <= index < dim:
            raise QuantumStateError(f"Basis index {index} outside dimension {dim}", "shape")
        psi = np.zeros(dim, dtype=complex)
        psi[index] = 1.0
        return cls(np.outer(psi, psi.conj()), vector=psi, label=label or f"P{index}")


Observable = Union[HermitianOperator, Projector]


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite state ρ"""

    entries: np.ndarray
    positivity_tol: float = field(default=POSITIVITY_TOL, repr=False, compare=False)

    def __post_init__(self) -> None:
        matrix = _as_matrix(self.entries, "density matrix")
        residual = hermitian_residual(matrix)
        if residual > HERMITIAN_TOL:
            raise QuantumStateError(
                f"Density matrix is not Hermitian (residual {residual:.3e})", "non_hermitian"
            )
        trace = complex(np.trace(matrix))
        if abs(trace - 1.0) > TRACE_TOL:
            raise QuantumStateError(f"Density matrix trace is {trace.real:.12f}", "trace")
        min_eig = float(np.min(np.linalg.eigvalsh(matrix)))
        if min_eig < -self.positivity_tol:
            raise QuantumStateError(
                f"Density matrix is not positive (min eigenvalue {min_eig:.3e})", "positivity"
            )
        object.__setattr__(self, "entries", matrix)

    @property
    def dim(self) -> int:
        return int(self.entries.shape[0])

    @property
    def populations(self) -> np.ndarray:
        return np.real(np.diag(self.entries)).copy()

    @property
    def purity(self) -> float:
        return float(np.real(np.trace(self.entries @ self.entries)))

    def population(self, index: int) -> float:
        return float(np.real(self.entries[index, index]))

    def coherence(self, row: int, col: int) -> complex:
        return complex(self.entries[row, col])

    @classmethod
    def from_pure(cls, vector: Sequence[complex]) -> "DensityMatrix":
        psi = np.asarray(vector, dtype=complex).ravel()
        norm = float(np.linalg.norm(psi))
        if abs(norm - 1.0) > 1e-10:
            raise QuantumStateError(f"State vector norm is {norm:.12f}, expected 1", "norm")
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def basis(cls, dim: int, index: int) -> "DensityMatrix":
        """|k⟩⟨k|"""
        rho = np.zeros((dim, dim), dtype=complex)
        rho[index, index] = 1.0
        return cls(rho)

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(np.eye(dim, dtype=complex) / dim)


@dataclass(frozen=True)
class EigenDecomposition:
    """Sorted spectrum, phase-fixed eigenvectors and degeneracy groups"""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns
    groups: Tuple[Tuple[int, ...], ...]

    def reconstruct(self) -> np.ndarray:
        """Σ a_i |a_i⟩⟨a_i|"""
        vecs = self.eigenvectors
        return (vecs * self.eigenvalues) @ vecs.conj().T

    def group_projectors(self) -> List[np.ndarray]:
        """Eigenspace projectors P_k, one per degeneracy group"""
        projectors = []
        for group in self.groups:
            block = self.eigenvectors[:, list(group)]
            projectors.append(block @ block.conj().T)
        return projectors


def _check_dims(rho: DensityMatrix, operator: Observable) -> None:
    if rho.dim != operator.dim:
        raise QuantumStateError(
            f"Dimension mismatch: state is {rho.dim}x{rho.dim}, "
            f"operator is {operator.dim}x{operator.dim}",
            "dimension",
        )


def eigendecompose(
    operator: Union[Observable, np.ndarray],
    degeneracy_tol: float = DEFAULT_DEGENERACY_TOL,
) -> EigenDecomposition:
    """Hermitian eigendecomposition with a deterministic phase convention

    The largest-magnitude component of each eigenvector is made real-positive
    and eigenvalues whose consecutive gaps are within degeneracy_tol share a group.
    """
    if isinstance(operator, np.ndarray):
        operator = HermitianOperator(operator)
    values, vectors = np.linalg.eigh(operator.entries)

    for col in range(vectors.shape[1]):
        pivot = vectors[int(np.argmax(np.abs(vectors[:, col]))), col]
        vectors[:, col] *= np.conj(pivot) / abs(pivot)

    groups: List[Tuple[int, ...]] = []
    current = [0]
    for i in range(1, len(values)):
        if values[i] - values[i - 1] <= degeneracy_tol:
            current.append(i)
        else:
            groups.append(tuple(current))
            current = [i]
    groups.append(tuple(current))

    values.setflags(write=False)
    vectors.setflags(write=False)
    return EigenDecomposition(eigenvalues=values, eigenvectors=vectors, groups=tuple(groups))


def measurement_projectors(
    operator: Observable, degeneracy_tol: float = DEFAULT_DEGENERACY_TOL
) -> List[np.ndarray]:
    """Complete orthogonal projector set realized by observing operator

    A projector P resolves into {P, 1−P}; a general observable into its
    eigenspace projectors.
    """
    if isinstance(operator, Projector):
        return [np.array(operator.entries), operator.complement()]
    return eigendecompose(operator, degeneracy_tol).group_projectors()


def dephase(rho: np.ndarray, projectors: Union[Sequence[np.ndarray], np.ndarray]) -> np.ndarray:
    """Σ_k P_k ρ P_k over the projector axis (-3), broadcasting over batches"""
    stack = np.asarray(projectors, dtype=complex)
    kicked = (stack @ rho[..., None, :, :] @ stack).sum(axis=-3)
    return hermitize(kicked)


def measure_projector(rho: DensityMatrix, projector: Projector) -> DensityMatrix:
    """PρP + (1−P)ρ(1−P), the state after observing P"""
    _check_dims(rho, projector)
    return DensityMatrix(dephase(rho.entries, measurement_projectors(projector)), rho.positivity_tol)


def measure_observable(
    rho: DensityMatrix,
    operator: Observable,
    degeneracy_tol: float = DEFAULT_DEGENERACY_TOL,
) -> DensityMatrix:
    """Destroy coherences between different eigenvalue groups of operator"""
    _check_dims(rho, operator)
    return DensityMatrix(
        dephase(rho.entries, measurement_projectors(operator, degeneracy_tol)), rho.positivity_tol
    )


def measure(
    rho: DensityMatrix,
    operator: Observable,
    degeneracy_tol: float = DEFAULT_DEGENERACY_TOL,
) -> DensityMatrix:
    """Dispatch to the projector kick or the observable dephasing"""
    if isinstance(operator, Projector):
        return measure_projector(rho, operator)
    return measure_observable(rho, operator, degeneracy_tol)


def expectation(rho: DensityMatrix, operator: Observable) -> float:
    """Re Tr(ρA)"""
    _check_dims(rho, operator)
    return float(np.real(np.trace(rho.entries @ operator.entries)))


def random_density_matrix(dim: int, rng: np.random.Generator, rank: Optional[int] = None) -> DensityMatrix:
    """Random mixed state from a Ginibre matrix G: ρ = GG†/Tr(GG†)"""
    cols = rank or dim
    ginibre = rng.normal(size=(dim, cols)) + 1j * rng.normal(size=(dim, cols))
    rho = ginibre @ ginibre.conj().T
    rho = hermitize(rho / np.real(np.trace(rho)))
    return DensityMatrix(rho)


def random_projector(dim: int, rng: np.random.Generator) -> Projector:
    """Rank-1 projector onto a random complex direction"""
    psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return Projector.from_vector(psi)
