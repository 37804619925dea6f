"""
Tests for observation plans and projector genotypes
"""

import numpy as np
import pytest

from zenoctl.core.dynamics import ContinuousObservation, InstantaneousEvent, PropagationConfig
from zenoctl.core.models import get_model
from zenoctl.core.observation import (
    InvalidGenotypeError,
    ObservationPlan,
    ProjectorGenotype,
    apply_plan_yield,
    apply_plans_yield,
    decode_vectors,
    equally_spaced_plan,
    event_times,
)
from zenoctl.core.quantum import Projector


def _superposition_genes(dim: int, first: int, second: int) -> np.ndarray:
    """Genes for (|first⟩ + |second⟩)/√2, laid out as (dim, [re, im])"""
    genes = np.zeros(2 * dim)
    genes[2 * first] = genes[2 * second] = 1.0
    return genes


def test_event_times() -> None:
    """Test t_k = k·T_f/(N+1)"""
    assert event_times(3, 200.0) == [50.0, 100.0, 150.0]
    assert event_times(1, 200.0) == [100.0]
    assert event_times(0, 200.0) == []


def test_decode_vectors_normalizes() -> None:
    """Test Re/Im gene pairs decode to unit vectors"""
    genes = np.array([[0.5, 0.5, 0.0, -0.5, 1.0, 0.0, 0.0, 0.0]])
    vectors = decode_vectors(genes, n_events=2, dim=2)
    assert vectors.shape == (1, 2, 2)
    np.testing.assert_allclose(np.linalg.norm(vectors, axis=-1), 1.0)
    np.testing.assert_allclose(vectors[0, 0], np.array([0.5 + 0.5j, -0.5j]) / np.sqrt(0.75))
    np.testing.assert_allclose(vectors[0, 1], [1.0, 0.0])


def test_zero_vector_is_rejected() -> None:
    """Test that an all-zero projector gene block names its event"""
    genes = np.array([[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]])
    with pytest.raises(InvalidGenotypeError) as exc:
        decode_vectors(genes, n_events=2, dim=2)
    assert exc.value.event_index == 1


def test_projector_genotype() -> None:
    """Test gene counting, decoding and size checks"""
    assert ProjectorGenotype.n_genes(5, 5) == 50
    genotype = ProjectorGenotype(1, 5, _superposition_genes(5, 0, 4))
    (projector,) = genotype.decode()
    assert projector.rank == 1
    assert projector.entries[0, 4] == pytest.approx(0.5)

    with pytest.raises(InvalidGenotypeError):
        ProjectorGenotype(2, 5, np.zeros(10))


def test_plan_ordering_and_emptiness() -> None:
    """Test strictly increasing times and the empty plan"""
    p = Projector.basis(2, 0)
    with pytest.raises(ValueError):
        ObservationPlan(instantaneous=(InstantaneousEvent(50.0, p), InstantaneousEvent(50.0, p)))

    assert ObservationPlan.empty().is_empty
    silent = ObservationPlan(continuous=(ContinuousObservation.constant(p, 0.0),))
    assert silent.is_empty
    assert not ObservationPlan(continuous=(ContinuousObservation.constant(p, 0.1),)).is_empty

    plan = ObservationPlan(instantaneous=(InstantaneousEvent(10.0, p), InstantaneousEvent(20.0, p)))
    assert plan.times == [10.0, 20.0]
    plan.validate(200.0)
    with pytest.raises(ValueError):
        ObservationPlan(instantaneous=(InstantaneousEvent(0.0, p),)).validate(200.0)


def test_equally_spaced_plan() -> None:
    """Test the optimized-sequence layout"""
    genotype = ProjectorGenotype(2, 5, np.tile(_superposition_genes(5, 0, 4), 2))
    plan = equally_spaced_plan(2, 300.0, genotype)
    assert plan.times == [100.0, 200.0]

    with pytest.raises(ValueError):
        equally_spaced_plan(0, 200.0, ProjectorGenotype(0, 5, np.zeros(0)))
    with pytest.raises(InvalidGenotypeError):
        equally_spaced_plan(3, 200.0, genotype)


def test_single_superposition_projector_yield() -> None:
    """Test that (|0⟩ + |4⟩)/√2 at T_f/2 moves half the population"""
    system = get_model("model2")
    plan = equally_spaced_plan(1, system.t_final, ProjectorGenotype(1, 5, _superposition_genes(5, 0, 4)))
    config = PropagationConfig.for_system(system, dt=0.05)
    value = apply_plan_yield(plan, system, None, system.target_projector(), config=config)
    assert value == pytest.approx(0.5, abs=1e-10)


def test_batch_plan_yields() -> None:
    """Test one plan per member, including an empty plan"""
    system = get_model("model2")
    plans = [
        equally_spaced_plan(1, system.t_final, ProjectorGenotype(1, 5, _superposition_genes(5, 0, 4))),
        ObservationPlan.empty(),
        equally_spaced_plan(1, system.t_final, ProjectorGenotype(1, 5, _superposition_genes(5, 0, 1))),
    ]
    yields = apply_plans_yield(
        plans,
        system,
        [None, None, None],
        system.target_projector(),
        config=PropagationConfig.for_system(system, dt=0.05),
    )
    np.testing.assert_allclose(yields, [0.5, 0.0, 0.0], atol=1e-10)


def test_yield_ignores_global_phase_of_genotype_vectors() -> None:
    """Test that rotating each encoded vector by e^{iφ} leaves the yield unchanged"""
    system = get_model("model2")
    rng = np.random.default_rng(17)
    n_events = 3
    genes = rng.uniform(-1.0, 1.0, ProjectorGenotype.n_genes(n_events, system.dim))

    pairs = genes.reshape(n_events, system.dim, 2)
    vectors = pairs[..., 0] + 1j * pairs[..., 1]
    rotated = vectors * np.exp(1j * rng.uniform(0.0, 2 * np.pi, (n_events, 1)))
    rotated_genes = np.stack([rotated.real, rotated.imag], axis=-1).ravel()

    plans = [
        equally_spaced_plan(n_events, system.t_final, ProjectorGenotype(n_events, system.dim, g))
        for g in (genes, rotated_genes)
    ]
    field = system.reference_field
    yields = apply_plans_yield(
        plans,
        system,
        [field, field],
        system.target_projector(),
        config=PropagationConfig.for_system(system, dt=0.05),
    )
    assert yields[0] == pytest.approx(yields[1], abs=1e-10)
