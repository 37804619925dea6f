"""
🧪 Experiments - scenario runner and the table reproductions

run_scenario optimizes a scenario's free parameters, replays the winner with
trajectory recording, and derives the reported quantities: yield, fluence, the
observed value just before the first fixed observation, the counterfactual
yield with observations disabled and the observation-only yield.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from .constants import TABLE_DT
from .dynamics import PropagationConfig, Trajectory, propagate_many, propagated_state
from .field import write_field_csv, write_spectrum_csv
from .genome import Candidate, GenomeLayout, ScenarioEvaluator
from .models import SystemSpec, check_coherent_bound, symmetry_residual
from .optimizer import (
    CostKind,
    CostSpec,
    GAConfig,
    GenerationRecord,
    OptimizationResult,
    evaluate_cost,
    optimize,
    write_history_csv,
)
from .quantum import Projector, QuantumStateError
from .results import RunResult, write_manifest
from .scenario import (
    ContinuousConfig,
    FieldConfig,
    InstantaneousConfig,
    ObjectiveConfig,
    PropagationSettings,
    Scenario,
    SequenceConfig,
    resolve_operator,
)

# Trace drift tolerated along a recorded trajectory
TRACE_DRIFT_TOL = 1e-8

ProgressCallback = Callable[[GenerationRecord], None]


@dataclass
class RunOutcome:
    """RunResult plus the objects behind it"""

    scenario: Scenario
    system: SystemSpec
    result: RunResult
    candidate: Candidate
    trajectory: Trajectory
    optimization: Optional[OptimizationResult] = None


def _target(scenario: Scenario, system: SystemSpec) -> Projector:
    label = scenario.objective.target_state
    if label is None:
        return system.target_projector()
    return system.population_projector(system.state_index(label))


def _cost_spec(scenario: Scenario, system: SystemSpec) -> CostSpec:
    objective = scenario.objective
    alpha = system.alpha if objective.alpha is None else objective.alpha
    return CostSpec(kind=objective.kind, target=objective.target_percent / 100.0, alpha=alpha)


def _violations(final: np.ndarray, trajectory: Trajectory, system: SystemSpec, coherent: bool) -> List[str]:
    violations = []
    try:
        rho = propagated_state(final)
    except QuantumStateError as e:
        return [f"final state invalid: {e}"]
    drift = float(np.max(np.abs(np.trace(trajectory.states, axis1=-2, axis2=-1) - 1.0)))
    if drift > TRACE_DRIFT_TOL:
        violations.append(f"trace drift {drift:.3e}")
    if coherent and system.name == "model3":
        violations += check_coherent_bound(rho).violations
    return violations


def run_scenario(
    scenario: Scenario,
    verbose: bool = False,
    on_generation: Optional[ProgressCallback] = None,
) -> RunOutcome:
    """Optimize (when anything is free) and evaluate one scenario"""
    system = scenario.build_system()
    layout = GenomeLayout(scenario, system)
    config = PropagationConfig.for_system(
        system, dt=scenario.propagation.dt, sample_every=scenario.propagation.sample_every
    )
    target = _target(scenario, system)
    cost = _cost_spec(scenario, system)

    optimization = None
    genes = np.zeros(layout.size)
    if layout.space is not None:
        if verbose:
            print(f"🧬 Optimizing {layout.size} genes for {scenario.name} on {system.name}")
        optimization = optimize(
            cost,
            layout.space,
            ScenarioEvaluator(layout, config, target),
            scenario.optimizer,
            on_generation=on_generation,
            verbose=verbose,
        )
        genes = optimization.best_genes

    candidate = layout.decode(genes)
    plan = candidate.plan
    fields = [candidate.field]
    continuous = [plan.continuous]
    events = [plan.instantaneous]
    counterfactual_index: Optional[int] = None
    observation_only_index: Optional[int] = None
    if not plan.is_empty:
        if candidate.field is not None:
            counterfactual_index = len(fields)
            fields.append(candidate.field)
            continuous.append(())
            events.append(())
        observation_only_index = len(fields)
        fields.append(None)
        continuous.append(plan.continuous)
        events.append(plan.instantaneous)

    batch = propagate_many(
        system.initial_density().entries,
        system,
        fields,
        continuous=continuous,
        events=events,
        config=config,
        record=True,
    )
    assert batch.trajectories is not None
    yields = batch.expectation(target.entries)
    final = batch.final_states[0]

    observed_value = None
    if layout.fixed_events:
        first = layout.fixed_events[0]
        before = batch.pre_event_states[first.time][0]
        observed_value = float(np.real(np.trace(before @ first.operator.entries)))

    result = RunResult(
        scenario=scenario.name,
        model=system.name,
        yield_fraction=float(yields[0]),
        fluence=candidate.fluence,
        cost=float(evaluate_cost(cost, float(yields[0]), candidate.fluence)),
        observed_value=observed_value,
        counterfactual_fraction=None if counterfactual_index is None else float(yields[counterfactual_index]),
        observation_only_fraction=None if observation_only_index is None else float(yields[observation_only_index]),
        parameters=layout.parameters(genes),
        populations=[float(p) for p in np.real(np.diagonal(final))],
        violations=_violations(final, batch.trajectories[0], system, coherent=plan.is_empty),
        seed=scenario.optimizer.seed if optimization else None,
        evaluations=optimization.evaluations if optimization else 0,
        config_hash=scenario.config_hash(),
    )
    if layout.n_events:
        result.extras["projectors"] = [
            [[float(a.real), float(a.imag)] for a in p.vector]
            for p in layout.decode_projectors(genes)
            if p.vector is not None
        ]
    if system.dim == 3 and result.success:
        result.extras["symmetry_residual"] = symmetry_residual(propagated_state(final))

    return RunOutcome(
        scenario=scenario,
        system=system,
        result=result,
        candidate=candidate,
        trajectory=batch.trajectories[0],
        optimization=optimization,
    )


def write_run_outputs(outcome: RunOutcome, directory: Path) -> List[Path]:
    """result.json, history.csv, traj.csv, field/spectrum CSVs and manifest.json"""
    output = outcome.scenario.output
    paths = [outcome.result.write_json(directory / "result.json")]
    if outcome.optimization is not None:
        paths.append(write_history_csv(outcome.optimization, directory / "history.csv"))
    paths.append(outcome.trajectory.to_csv(directory / "traj.csv", coherences=output.coherences))
    if outcome.candidate.field is not None:
        paths.append(write_field_csv(outcome.candidate.field, directory / "field.csv", dt=output.field_dt))
        paths.append(write_spectrum_csv(outcome.candidate.field, directory / "spectrum.csv"))
    paths.append(
        write_manifest(
            directory,
            outcome.result.config_hash,
            outcome.result.seed,
            scenario=outcome.scenario.name,
            model=outcome.system.name,
        )
    )
    return paths


def _table_scenario(name: str, model: str, ga: Optional[GAConfig], dt: float, **sections: Any) -> Scenario:
    return Scenario(
        name=name,
        model=model,
        optimizer=ga or GAConfig(),
        propagation=PropagationSettings(dt=dt),
        **sections,
    )


TABLE1_ROWS = ("none", "mu", "h0", "P0", "P1", "P2", "P3", "P4")
TABLE2_ROWS = tuple(str(t) for t in range(10, 101, 10))
TABLE3_ROWS = ("0", "1", "3", "5", "7", "9")
TABLE4_ROWS = ("none", "P0", "P1", "P2")
TABLE5_ROWS = ("P0", "P1", "P2")
TABLE6_ROWS = ("0", "0.01", "0.03", "0.05", "0.09", "0.15", "0.20", "0.30")

TABLE_ROWS: Dict[int, Tuple[str, ...]] = {
    1: TABLE1_ROWS,
    2: TABLE2_ROWS,
    3: TABLE3_ROWS,
    4: TABLE4_ROWS,
    5: TABLE5_ROWS,
    6: TABLE6_ROWS,
}

TABLE_COLUMNS: Dict[int, Tuple[str, ...]] = {
    1: ("observation", "O_percent", "observed_value", "O_E0_percent", "F", "observation_only_percent"),
    2: ("O_T_percent", "O_percent", "O_E0_percent", "F", "F0"),
    3: ("N", "O_PN_percent", "O_EPN_percent", "O_0PN_percent", "field_alone_percent"),
    4: ("observation", "O_percent", "observed_value", "O_E0_percent", "F"),
    5: ("observation", "O_percent", "F", "gamma", "T1", "T2"),
    6: ("kappa", "O_percent", "P1p_percent", "F"),
}


def table1_scenario(selector: str, ga: Optional[GAConfig] = None, dt: float = TABLE_DT) -> Scenario:
    """Model 1 field fighting one observation at T_f/2"""
    if selector not in TABLE1_ROWS:
        raise ValueError(f"Table I row must be one of {', '.join(TABLE1_ROWS)}")
    observations = [] if selector == "none" else [InstantaneousConfig(operator=selector)]
    return _table_scenario(
        f"table1-{selector}",
        "model1",
        ga,
        dt,
        field=FieldConfig(family="shaped"),
        instantaneous=observations,
        objective=ObjectiveConfig(kind=CostKind.FIELD, target_percent=100.0),
    )


def run_table1(
    selector: str,
    ga: Optional[GAConfig] = None,
    dt: float = TABLE_DT,
    verbose: bool = False,
    on_generation: Optional[ProgressCallback] = None,
) -> RunResult:
    """O, Tr[ρ(T_m)A], O[E,0] and F for one observed operator"""
    outcome = run_scenario(table1_scenario(selector, ga, dt), verbose, on_generation)
    result = outcome.result
    if selector == "none":
        result.counterfactual_fraction = result.yield_fraction
    elif result.observed_value is not None:
        spectrum = np.linalg.eigvalsh(resolve_operator(outcome.system, selector).entries)
        nearest = float(spectrum[int(np.argmin(np.abs(spectrum - result.observed_value)))])
        result.extras["nearest_eigenvalue"] = nearest
        result.extras["eigenvalue_distance"] = abs(result.observed_value - nearest)
    return result


def table2_scenario(
    target_percent: float, observe: bool = True, ga: Optional[GAConfig] = None, dt: float = TABLE_DT
) -> Scenario:
    suffix = "mu" if observe else "none"
    return _table_scenario(
        f"table2-{target_percent:g}-{suffix}",
        "model1",
        ga,
        dt,
        field=FieldConfig(family="shaped"),
        instantaneous=[InstantaneousConfig(operator="mu")] if observe else [],
        objective=ObjectiveConfig(kind=CostKind.FIELD, target_percent=target_percent),
    )


def run_table2(
    target_percent: float,
    ga: Optional[GAConfig] = None,
    dt: float = TABLE_DT,
    with_reference: bool = True,
    verbose: bool = False,
    on_generation: Optional[ProgressCallback] = None,
) -> RunResult:
    """Field cooperating with (or fighting) a dipole observation for a target O_T"""
    result = run_scenario(table2_scenario(target_percent, True, ga, dt), verbose, on_generation).result
    result.extras["target_percent"] = target_percent
    if with_reference:
        reference = run_scenario(table2_scenario(target_percent, False, ga, dt), verbose).result
        result.extras["reference_fluence"] = reference.fluence
        result.extras["reference_percent"] = reference.yield_percent
    return result


def table3_scenario(
    n_events: int, with_field: bool, ga: Optional[GAConfig] = None, dt: float = TABLE_DT
) -> Scenario:
    """Model 2 optimized projector sequence, field off or fixed at the reference field"""
    if with_field:
        field_config = FieldConfig(family="shaped", optimize=False, use_reference=True)
    else:
        field_config = FieldConfig(family="none", optimize=False)
    return _table_scenario(
        f"table3-n{n_events}-{'field' if with_field else 'nofield'}",
        "model2",
        ga,
        dt,
        field=field_config,
        sequence=SequenceConfig(n_events=n_events) if n_events > 0 else None,
        objective=ObjectiveConfig(kind=CostKind.JOINT if with_field else CostKind.PLAN),
    )


def run_table3(
    n_events: int,
    with_field: bool,
    ga: Optional[GAConfig] = None,
    dt: float = TABLE_DT,
    verbose: bool = False,
    on_generation: Optional[ProgressCallback] = None,
) -> RunResult:
    """O[P_N] (no field) or O[E,P_N] with the replayed O[0,P_N]"""
    if n_events < 0:
        raise ValueError(f"N must be >= 0, got {n_events}")
    result = run_scenario(table3_scenario(n_events, with_field, ga, dt), verbose, on_generation).result
    result.extras["n_events"] = n_events
    if with_field:
        field_alone = result.counterfactual_fraction if n_events else result.yield_fraction
        result.extras["field_alone_percent"] = round(100.0 * (field_alone or 0.0), 2)
        result.extras["replay_without_field_percent"] = result.observation_only_percent or 0.0
    return result


def table45_scenario(
    selector: str, mode: str, ga: Optional[GAConfig] = None, dt: float = TABLE_DT
) -> Scenario:
    """Model 3 rectangular pulse with an instantaneous or optimized continuous observation"""
    if mode not in ("instantaneous", "continuous"):
        raise ValueError(f"mode must be 'instantaneous' or 'continuous', got {mode!r}")
    rows = TABLE4_ROWS if mode == "instantaneous" else TABLE5_ROWS
    if selector not in rows:
        raise ValueError(f"{mode} rows are {', '.join(rows)}")
    sections: Dict[str, Any] = {
        "field": FieldConfig(family="rectangular"),
        "objective": ObjectiveConfig(kind=CostKind.WINDOW),
    }
    if selector != "none":
        if mode == "instantaneous":
            sections["instantaneous"] = [InstantaneousConfig(operator=selector)]
        else:
            sections["continuous"] = [ContinuousConfig(operator=selector, optimize=True)]
    return _table_scenario(f"table{4 if mode == 'instantaneous' else 5}-{selector}", "model3", ga, dt, **sections)


def run_table4_5(
    selector: str,
    mode: str,
    ga: Optional[GAConfig] = None,
    dt: float = TABLE_DT,
    verbose: bool = False,
    on_generation: Optional[ProgressCallback] = None,
) -> RunResult:
    """Model 3 symmetry breaking by instantaneous (Table IV) or continuous (Table V) observation"""
    result = run_scenario(table45_scenario(selector, mode, ga, dt), verbose, on_generation).result
    if mode == "continuous":
        label = selector
        gamma = result.parameters[f"gamma_{label}"]
        t1, t2 = sorted((result.parameters[f"T1_{label}"], result.parameters[f"T2_{label}"]))
        result.extras.update({"gamma": gamma, "T1": t1, "T2": t2})
    return result


def table6_scenario(kappa: float, ga: Optional[GAConfig] = None, dt: float = TABLE_DT) -> Scenario:
    """Model 4 under constant continuous observation of |1'⟩"""
    return _table_scenario(
        f"table6-kappa{kappa:g}",
        "model4",
        ga,
        dt,
        field=FieldConfig(family="shaped"),
        continuous=[ContinuousConfig(operator="P1'", kappa=kappa)],
        objective=ObjectiveConfig(kind=CostKind.FIELD, target_percent=100.0),
    )


def run_table6(
    kappa: float,
    ga: Optional[GAConfig] = None,
    dt: float = TABLE_DT,
    verbose: bool = False,
    on_generation: Optional[ProgressCallback] = None,
) -> RunResult:
    """Target yield and residual |1'⟩ population for one observation strength"""
    outcome = run_scenario(table6_scenario(kappa, ga, dt), verbose, on_generation)
    result = outcome.result
    leak = outcome.system.state_index("1'")
    result.extras["kappa"] = kappa
    result.extras["P1p_percent"] = result.population_percent(leak)
    return result


def resolve_table_row(table: int, row: str) -> str:
    """Canonical row key; numeric keys match by value, so '0.3' finds '0.30'"""
    if table not in TABLE_ROWS:
        raise ValueError(f"Unknown table {table}; choose from 1-6")
    keys = TABLE_ROWS[table]
    if row in keys:
        return row
    unknown = ValueError(f"Table {table} rows are {', '.join(keys)}")
    try:
        value = float(row)
    except ValueError:
        raise unknown from None
    for key in keys:
        try:
            if float(key) == value:
                return key
        except ValueError:
            continue
    raise unknown


def run_table_row(
    table: int,
    row: str,
    ga: Optional[GAConfig] = None,
    dt: float = TABLE_DT,
    verbose: bool = False,
    on_generation: Optional[ProgressCallback] = None,
) -> Tuple[Dict[str, Any], List[RunResult]]:
    """Run one row of a table; returns the table-layout row and the underlying results"""
    row = resolve_table_row(table, row)
    kwargs: Dict[str, Any] = {"ga": ga, "dt": dt, "verbose": verbose, "on_generation": on_generation}

    if table == 1:
        r = run_table1(row, **kwargs)
        return {
            "observation": row,
            "O_percent": r.yield_percent,
            "observed_value": r.observed_value,
            "O_E0_percent": r.counterfactual_percent,
            "F": r.fluence,
            "observation_only_percent": r.observation_only_percent,
        }, [r]

    if table == 2:
        r = run_table2(float(row), **kwargs)
        return {
            "O_T_percent": float(row),
            "O_percent": r.yield_percent,
            "O_E0_percent": r.counterfactual_percent,
            "F": r.fluence,
            "F0": r.extras.get("reference_fluence"),
        }, [r]

    if table == 3:
        n_events = int(row)
        bare = run_table3(n_events, False, **kwargs)
        driven = run_table3(n_events, True, **kwargs)
        return {
            "N": n_events,
            "O_PN_percent": bare.yield_percent,
            "O_EPN_percent": driven.yield_percent,
            "O_0PN_percent": driven.extras["replay_without_field_percent"],
            "field_alone_percent": driven.extras["field_alone_percent"],
        }, [bare, driven]

    if table == 4:
        r = run_table4_5(row, "instantaneous", **kwargs)
        return {
            "observation": row,
            "O_percent": r.yield_percent,
            "observed_value": r.observed_value,
            "O_E0_percent": r.counterfactual_percent,
            "F": r.fluence,
        }, [r]

    if table == 5:
        r = run_table4_5(row, "continuous", **kwargs)
        return {
            "observation": row,
            "O_percent": r.yield_percent,
            "F": r.fluence,
            "gamma": r.extras["gamma"],
            "T1": r.extras["T1"],
            "T2": r.extras["T2"],
        }, [r]

    r = run_table6(float(row), **kwargs)
    return {
        "kappa": float(row),
        "O_percent": r.yield_percent,
        "P1p_percent": r.extras["P1p_percent"],
        "F": r.fluence,
    }, [r]
