"""
Tests for the model catalog
"""

import numpy as np
import pytest

from zenoctl.core.models import (
    MODEL1_TRANSITIONS,
    SystemSpec,
    check_coherent_bound,
    coherent_bound_check,
    get_model,
    list_models,
    model2_reference_field,
    rectangular_field,
    shaped_field,
    symmetry_invariant,
    symmetry_residual,
)
from zenoctl.core.quantum import DensityMatrix


def test_catalog_contents() -> None:
    """Test that all four models build and validate"""
    names = [system.name for system in list_models()]
    assert names == ["model1", "model2", "model3", "model4"]

    with pytest.raises(ValueError, match="Unknown model"):
        get_model("model9")


def test_model1_ladder() -> None:
    """Test ladder energies and nearest-neighbour dipoles"""
    system = get_model("model1")
    assert system.dim == 5
    assert system.energies[4] == pytest.approx(sum(MODEL1_TRANSITIONS))
    gaps = np.diff(system.energies)
    np.testing.assert_allclose(gaps, MODEL1_TRANSITIONS)
    assert system.dipole[0, 1] == pytest.approx(0.5855)
    assert system.dipole[0, 2] == 0.0
    assert (system.initial_state, system.target_state) == (0, 4)
    assert system.sigma == 30.0
    assert system.alpha == 0.05


def test_model2_reference_field() -> None:
    """Test the fixed non-optimal field of model 2"""
    system = get_model("model2")
    assert system.alpha == 0.0
    field = model2_reference_field()
    assert system.reference_field == field
    np.testing.assert_allclose(field.amplitudes, [0.07] * 4)
    np.testing.assert_allclose(field.phases, [0.0] * 4)
    assert field.fluence() == pytest.approx(4 * 0.07**2)


def test_model3_symmetric_system() -> None:
    """Test the equally spaced three-level system"""
    system = get_model("model3")
    assert system.energies == (1.0, 2.0, 3.0)
    assert system.field_family == "rectangular"
    assert system.target_state == 1
    field = rectangular_field(system, 0.3)
    assert field.carrier == 1.0
    assert field.t_final == 200.0


def test_model4_labels() -> None:
    """Test the primed state and its degenerate transition"""
    system = get_model("model4")
    assert system.state_labels == ("0", "1", "1'", "2", "3")
    assert system.state_index("1'") == 2
    assert system.state_index("4") == 4
    assert system.population_projector(2).label == "P1'"
    # 1 → 1' and 2 → 3 share ω = 0.8
    assert system.energies[2] - system.energies[1] == pytest.approx(0.8)
    assert system.energies[4] - system.energies[3] == pytest.approx(0.8)

    with pytest.raises(ValueError):
        system.state_index("7")
    with pytest.raises(ValueError):
        system.state_index("x")


def test_system_validation() -> None:
    """Test dipole shape, symmetry, indices and transition matching"""
    base = dict(
        name="bad",
        energies=(0.0, 1.0),
        dipole=np.array([[0.0, 1.0], [1.0, 0.0]]),
        transition_frequencies=(1.0,),
        initial_state=0,
        target_state=1,
        t_final=10.0,
        alpha=0.0,
    )
    SystemSpec(**base)  # type: ignore[arg-type]

    with pytest.raises(ValueError, match="symmetric"):
        SystemSpec(**{**base, "dipole": np.array([[0.0, 1.0], [0.5, 0.0]])})  # type: ignore[arg-type]
    with pytest.raises(ValueError, match="matches no dipole-coupled pair"):
        SystemSpec(**{**base, "transition_frequencies": (1.5,)})  # type: ignore[arg-type]
    with pytest.raises(ValueError, match="outside"):
        SystemSpec(**{**base, "target_state": 2})  # type: ignore[arg-type]
    with pytest.raises(ValueError, match="does not match"):
        SystemSpec(**{**base, "dipole": np.zeros((3, 3))})  # type: ignore[arg-type]
    with pytest.raises(ValueError, match="finite"):
        SystemSpec(**{**base, "energies": (0.0, float("nan"))})  # type: ignore[arg-type]


def test_config_round_trip() -> None:
    """Test to_config/from_config for every catalog model"""
    for system in list_models():
        rebuilt = SystemSpec.from_config(system.to_config())
        assert rebuilt.energies == system.energies
        np.testing.assert_array_equal(rebuilt.dipole, system.dipole)
        assert rebuilt.transition_frequencies == system.transition_frequencies
        assert rebuilt.state_labels == system.state_labels
        assert rebuilt.sigma == system.sigma


def test_shaped_field_helper() -> None:
    """Test resonant shaped fields and the missing-σ error"""
    system = get_model("model4")
    field = shaped_field(system, [0.1, 0.2, 0.3], [0.0, 1.0, 2.0])
    np.testing.assert_allclose(field.frequencies, system.transition_frequencies)
    with pytest.raises(ValueError, match="envelope"):
        shaped_field(get_model("model3"), [0.1], [0.0])


def test_symmetry_invariant_on_coherent_states() -> None:
    """Test |C₀C₂ − C₁²/2| vanishes on (a², √2ab, b²)"""
    a, b = np.cos(0.3), np.exp(0.7j) * np.sin(0.3)
    state = np.array([a * a, np.sqrt(2) * a * b, b * b])
    assert symmetry_invariant(state) == pytest.approx(0.0, abs=1e-15)
    assert symmetry_invariant([1.0, 0.0, 0.0]) == 0.0
    assert symmetry_invariant([0.0, 1.0, 0.0]) == pytest.approx(0.5)

    rho = DensityMatrix.from_pure(state)
    assert symmetry_residual(rho) == pytest.approx(0.0, abs=1e-15)
    assert coherent_bound_check(rho)


def test_coherent_bound_violations() -> None:
    """Test that the bound check reports broken symmetry and ρ11 > 1/2"""
    rho = DensityMatrix(np.diag([0.1, 0.8, 0.1]).astype(complex))
    check = check_coherent_bound(rho)
    assert not check.holds
    assert check.target_population == pytest.approx(0.8)
    assert len(check.violations) == 2
    assert not coherent_bound_check(rho)
