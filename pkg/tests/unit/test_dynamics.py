"""
Tests for master-equation propagation
"""

import csv
import math
from pathlib import Path
from typing import List, Tuple

import numpy as np
import pytest

from zenoctl.core.constants import INTEGRATOR_POSITIVITY_TOL
from zenoctl.core.dynamics import (
    ContinuousObservation,
    InstantaneousEvent,
    PropagationConfig,
    PropagationError,
    propagate,
    propagate_many,
    propagate_pure,
)
from zenoctl.core.field import RectangularField, ShapedField
from zenoctl.core.models import get_model, model3, rectangular_field, shaped_field, symmetry_invariant
from zenoctl.core.oracle import analytic_sequence_yield
from zenoctl.core.quantum import (
    DensityMatrix,
    HermitianOperator,
    Observable,
    Projector,
    QuantumStateError,
    random_density_matrix,
    random_projector,
)


def test_config_validation() -> None:
    """Test span, step and method checks"""
    with pytest.raises(PropagationError):
        PropagationConfig(t_start=10.0, t_end=5.0)
    with pytest.raises(PropagationError):
        PropagationConfig(dt=0.0)
    with pytest.raises(PropagationError):
        PropagationConfig(method="euler")
    with pytest.raises(PropagationError):
        PropagationConfig(t_end=math.inf)

    config = PropagationConfig(t_end=1.0, dt=0.3)
    assert config.n_steps == 3
    assert config.step == pytest.approx(1.0 / 3.0)
    assert config.grid()[-1] == pytest.approx(1.0)


def test_propagation_error_reports_time() -> None:
    """Test the time suffix in error messages"""
    assert str(PropagationError("Control field is not finite", time=2.5)).endswith("(t = 2.500000 fs)")
    assert str(PropagationError("boom")) == "boom"


def test_continuous_window_snapping() -> None:
    """Test per-step strengths with window edges snapped to the grid"""
    observation = ContinuousObservation.window(Projector.basis(2, 0), 0.24, 0.76, 2.0)
    strengths = observation.step_strengths(PropagationConfig(t_end=1.0, dt=0.1))
    np.testing.assert_allclose(strengths, [0, 0, 2, 2, 2, 2, 2, 2, 0, 0])
    assert observation.strength_at(0.5) == 2.0
    assert observation.strength_at(0.9) == 0.0

    constant = ContinuousObservation.constant(Projector.basis(2, 0), 0.3)
    np.testing.assert_allclose(constant.step_strengths(PropagationConfig(t_end=1.0, dt=0.25)), [0.3] * 4)
    assert ContinuousObservation.constant(Projector.basis(2, 0), 0.0).is_off

    with pytest.raises(PropagationError):
        ContinuousObservation.window(Projector.basis(2, 0), 0.5, 0.5, 1.0)
    with pytest.raises(PropagationError):
        ContinuousObservation.window(Projector.basis(2, 0), 0.1, 0.5, -1.0)


def test_free_evolution_is_exact() -> None:
    """Test that zero field leaves populations alone and rotates coherences exactly"""
    system = get_model("model1")
    rho0 = random_density_matrix(system.dim, np.random.default_rng(5))
    final, trajectory = propagate(rho0, system, None)

    energies = np.array(system.energies)
    phases = np.exp(-1j * energies * system.t_final)
    expected = rho0.entries * np.outer(phases, phases.conj())
    np.testing.assert_allclose(final.entries, expected, atol=1e-12)
    np.testing.assert_allclose(trajectory.populations[-1], rho0.populations, atol=1e-12)
    assert trajectory.times[0] == 0.0
    assert trajectory.times[-1] == pytest.approx(system.t_final)


def test_off_grid_events_match_exact_composition() -> None:
    """Test events that split a step against the integrator-free composition"""
    system = get_model("model2")
    rng = np.random.default_rng(19)
    events = [(33.333, random_projector(system.dim, rng)), (121.7071, random_projector(system.dim, rng))]
    config = PropagationConfig.for_system(system, dt=0.05)
    final, _ = propagate(
        system.initial_density(),
        system,
        None,
        events=[InstantaneousEvent(time=t, operator=p) for t, p in events],
        config=config,
    )
    expected = analytic_sequence_yield(system, events)
    assert final.population(system.target_state) == pytest.approx(expected, abs=1e-10)


def test_continuous_dephasing_closed_form() -> None:
    """Test ρ_ij(t) = ρ_ij(0) exp(−½κ(a_i − a_j)² t) for a diagonal observable"""
    system = model3()
    levels = np.array([0.0, 1.0, 3.0])
    kappa, t_end = 0.4, 5.0
    rho0 = random_density_matrix(3, np.random.default_rng(2))
    final, _ = propagate(
        rho0,
        system,
        None,
        continuous=[ContinuousObservation.constant(HermitianOperator.diagonal(levels), kappa)],
        config=PropagationConfig(t_end=t_end, dt=0.01),
    )
    energies = np.array(system.energies)
    phases = np.exp(-1j * energies * t_end)
    decay = np.exp(-0.5 * kappa * (levels[:, None] - levels[None, :]) ** 2 * t_end)
    expected = rho0.entries * decay * np.outer(phases, phases.conj())
    np.testing.assert_allclose(final.entries, expected, atol=1e-6)


def test_general_observable_dephases_in_its_eigenbasis() -> None:
    """Test a non-diagonal observed operator with no field and no free evolution"""
    system = get_model("model3")
    flat = type(system)(
        name="flat",
        energies=(0.0, 0.0, 0.0),
        dipole=system.dipole,
        transition_frequencies=(),
        initial_state=0,
        target_state=1,
        t_final=20.0,
        alpha=0.0,
    )
    final, _ = propagate(
        flat.initial_density(),
        flat,
        None,
        continuous=[ContinuousObservation.constant(flat.mu, 2.0)],
        config=PropagationConfig(t_end=20.0, dt=0.01),
    )
    values, vectors = np.linalg.eigh(flat.dipole)
    in_basis = vectors.T @ final.entries @ vectors
    # Long strong observation leaves the state diagonal in μ's eigenbasis
    assert np.max(np.abs(in_basis - np.diag(np.diag(in_basis)))) < 1e-6
    start = vectors.T @ flat.initial_density().entries @ vectors
    np.testing.assert_allclose(np.diag(in_basis).real, np.diag(start).real, atol=1e-8)


def test_trace_hermiticity_positivity_under_driving() -> None:
    """Test state validity along driven trajectories with observations"""
    system = get_model("model1")
    rng = np.random.default_rng(23)
    config = PropagationConfig.for_system(system, dt=0.05, sample_every=20)
    for _ in range(3):
        field = shaped_field(system, rng.uniform(0.0, 0.2, 4), rng.uniform(0.0, 2 * math.pi, 4))
        _, trajectory = propagate(
            random_density_matrix(system.dim, rng),
            system,
            field,
            continuous=[ContinuousObservation.window(system.population_projector(2), 40.0, 90.0, 0.5)],
            events=[InstantaneousEvent(time=100.0, operator=system.mu)],
            config=config,
        )
        traces = np.trace(trajectory.states, axis1=-2, axis2=-1)
        np.testing.assert_allclose(traces, 1.0, atol=1e-10)
        for k in range(len(trajectory.times)):
            trajectory.density(k)  # raises on a non-Hermitian or non-positive state


def test_step_halving_convergence() -> None:
    """Test that halving dt changes the model 1 yield by less than 1e-6 over [0, T_f]"""
    system = get_model("model1")
    field = shaped_field(system, [0.5] * 4, [0.0] * 4)
    target = system.target_projector().entries
    yields = {}
    for dt in (0.02, 0.01, 0.005):
        batch = propagate_many(
            system.initial_density().entries,
            system,
            [field],
            config=PropagationConfig.for_system(system, dt=dt),
        )
        yields[dt] = float(batch.expectation(target)[0])
    # The tables run at 0.02, scenarios at 0.01
    assert abs(yields[0.02] - yields[0.01]) < 1e-6
    assert abs(yields[0.01] - yields[0.005]) < 1e-6


def test_batched_states_stay_physical() -> None:
    """Test trace, Hermiticity and positivity over a large randomized batch"""
    system = get_model("model1")
    rng = np.random.default_rng(1001)
    members = 1000
    span = 40.0
    mu, h0 = system.mu, system.h0
    rho0 = np.stack(
        [
            random_density_matrix(system.dim, rng, rank=int(rng.integers(1, system.dim + 1))).entries
            for _ in range(members)
        ]
    )
    fields = [
        ShapedField.from_arrays(
            rng.uniform(0.0, 0.5, 4),
            system.transition_frequencies,
            rng.uniform(0.0, 2 * math.pi, 4),
            10.0,
            span,
        )
        for _ in range(members)
    ]
    continuous: List[Tuple[ContinuousObservation, ...]] = []
    events: List[Tuple[InstantaneousEvent, ...]] = []
    for _ in range(members):
        t1 = float(rng.uniform(0.0, span / 2))
        observed: Observable = (
            system.population_projector(int(rng.integers(0, system.dim)))
            if rng.random() < 0.5
            else mu
        )
        continuous.append(
            (ContinuousObservation.window(observed, t1, t1 + span / 4, float(rng.uniform(0.0, 0.5))),)
        )
        kick: Observable = random_projector(system.dim, rng) if rng.random() < 0.5 else h0
        events.append((InstantaneousEvent(time=12.34, operator=kick), InstantaneousEvent(time=25.0, operator=mu)))

    batch = propagate_many(
        rho0,
        system,
        fields,
        continuous=continuous,
        events=events,
        config=PropagationConfig(t_end=span, dt=0.05),
    )
    final = batch.final_states
    assert final.shape == (members, system.dim, system.dim)
    np.testing.assert_allclose(np.trace(final, axis1=-2, axis2=-1), 1.0, atol=1e-10)
    np.testing.assert_allclose(final, final.conj().swapaxes(-1, -2), atol=1e-12)
    assert np.min(np.linalg.eigvalsh(final)) >= -INTEGRATOR_POSITIVITY_TOL


def test_purity_never_increases_without_field() -> None:
    """Test Tr(ρ²) is non-increasing when E=0 and every observable commutes with H₀"""
    system = get_model("model1")
    rng = np.random.default_rng(29)
    config = PropagationConfig.for_system(system, dt=0.05, sample_every=10)
    for _ in range(5):
        _, trajectory = propagate(
            random_density_matrix(system.dim, rng),
            system,
            None,
            continuous=[
                ContinuousObservation.constant(system.population_projector(2), 0.05),
                ContinuousObservation.window(system.h0, 60.0, 140.0, 0.02),
            ],
            events=[InstantaneousEvent(time=100.0, operator=system.population_projector(4))],
            config=config,
        )
        states = trajectory.states
        purity = np.real(np.einsum("tij,tji->t", states, states))
        assert np.all(np.diff(purity) <= 1e-12)
        assert purity[-1] < purity[0]


def test_density_and_wavefunction_paths_agree() -> None:
    """Test ρ = |C⟩⟨C| for pure coherent dynamics"""
    system = model3()
    field = rectangular_field(system, 0.3)
    config = PropagationConfig(t_end=20.0, dt=0.01, sample_every=100)
    final, trajectory = propagate(system.initial_density(), system, field, config=config)
    pure = propagate_pure([1.0, 0.0, 0.0], system, field, config)
    np.testing.assert_allclose(trajectory.times, pure.times)
    np.testing.assert_allclose(trajectory.populations, pure.populations, atol=1e-6)
    np.testing.assert_allclose(pure.norms, 1.0, atol=1e-6)
    np.testing.assert_allclose(final.entries, np.outer(pure.final, pure.final.conj()), atol=1e-6)


def test_symmetry_invariant_conserved() -> None:
    """Test |C₀C₂ − C₁²/2| stays at zero under a resonant pulse"""
    system = model3()
    trajectory = propagate_pure(
        [1.0, 0.0, 0.0], system, rectangular_field(system, 0.05), PropagationConfig.for_system(system)
    )
    assert max(symmetry_invariant(c) for c in trajectory.amplitudes) < 1e-6
    assert trajectory.populations[:, 1].max() <= 0.5 + 1e-6


def test_propagate_pure_validates_state() -> None:
    """Test norm and dimension checks"""
    system = model3()
    with pytest.raises(QuantumStateError):
        propagate_pure([1.0, 1.0, 0.0], system, None)
    with pytest.raises(QuantumStateError):
        propagate_pure([1.0, 0.0], system, None)


def test_batch_matches_single_propagation() -> None:
    """Test that members of a batch evolve independently"""
    system = get_model("model1")
    config = PropagationConfig.for_system(system, dt=0.05)
    fields = [
        shaped_field(system, [0.1, 0.1, 0.1, 0.1], [0.0, 0.0, 0.0, 0.0]),
        None,
        shaped_field(system, [0.05, 0.2, 0.0, 0.1], [1.0, 2.0, 3.0, 4.0]),
    ]
    events = [
        (InstantaneousEvent(time=100.0, operator=system.mu),),
        (),
        (InstantaneousEvent(time=55.555, operator=system.population_projector(1)),),
    ]
    batch = propagate_many(system.initial_density().entries, system, fields, events=events, config=config)
    for member, (field, member_events) in enumerate(zip(fields, events)):
        final, _ = propagate(system.initial_density(), system, field, events=member_events, config=config)
        np.testing.assert_allclose(batch.final_states[member], final.entries, atol=1e-9)


def test_pre_event_states_are_recorded() -> None:
    """Test that the lab-frame state just before an event is kept"""
    system = get_model("model1")
    rho0 = random_density_matrix(system.dim, np.random.default_rng(4))
    batch = propagate_many(
        rho0.entries,
        system,
        [None],
        events=[(InstantaneousEvent(time=100.0, operator=system.mu),)],
        config=PropagationConfig.for_system(system, dt=0.05),
    )
    before = batch.pre_event_states[100.0][0]
    # Populations are untouched by free evolution
    np.testing.assert_allclose(np.real(np.diag(before)), rho0.populations, atol=1e-12)


def test_invalid_inputs() -> None:
    """Test empty batches, dimension mismatches and out-of-span events"""
    system = get_model("model3")
    with pytest.raises(PropagationError):
        propagate_many(system.initial_density().entries, system, [])
    with pytest.raises(QuantumStateError):
        propagate(DensityMatrix.basis(2, 0), system, None)
    with pytest.raises(QuantumStateError):
        propagate(
            system.initial_density(),
            system,
            None,
            events=[InstantaneousEvent(time=10.0, operator=Projector.basis(2, 0))],
        )
    with pytest.raises(PropagationError):
        propagate(
            system.initial_density(),
            system,
            None,
            events=[InstantaneousEvent(time=300.0, operator=Projector.basis(3, 0))],
        )


def test_non_finite_field_is_reported() -> None:
    """Test that a field producing NaN is rejected with the offending time"""

    class BrokenField(RectangularField):
        def evaluate(self, t):  # type: ignore[no-untyped-def]
            values = np.asarray(super().evaluate(t), dtype=float)
            return np.where(np.asarray(t) > 5.0, np.nan, values)

    system = model3()
    with pytest.raises(PropagationError) as exc:
        propagate(
            system.initial_density(),
            system,
            BrokenField(amplitude=0.1, t_final=200.0),
            config=PropagationConfig(t_end=10.0, dt=0.5),
        )
    assert exc.value.time is not None and exc.value.time > 5.0


def test_trajectory_csv(tmp_path: Path) -> None:
    """Test trajectory export with coherence columns"""
    system = get_model("model4")
    field = ShapedField.from_arrays([0.1, 0.1, 0.1], system.transition_frequencies, [0, 0, 0], 30.0, 200.0)
    _, trajectory = propagate(
        system.initial_density(), system, field, config=PropagationConfig.for_system(system, dt=0.1)
    )
    path = trajectory.to_csv(tmp_path / "traj.csv", coherences=[(0, 1)])
    with open(path) as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == ["t", "p_0", "p_1", "p_1'", "p_2", "p_3", "re_rho_0_1", "im_rho_0_1"]
    assert len(rows) == len(trajectory.times) + 1
