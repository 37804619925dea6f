"""
⚛️ zenoctl CLI

Command-line interface for observation-assisted quantum control experiments.
"""

import os
from pathlib import Path
from typing import Any, Dict, List, Optional

import typer
from rich.console import Console
from rich.progress import BarColumn, Progress, SpinnerColumn, TextColumn
from rich.table import Table

from .core.constants import DEFAULT_OUTPUT_DIR, OUTPUT_DIR_ENV, STATUS_DISPLAY, TABLE_DT
from .core.dynamics import PropagationError
from .core.observation import InvalidGenotypeError
from .core.optimizer import GAConfig, GenerationRecord, OptimizationError
from .core.quantum import QuantumStateError
from .core.scenario import PropagationSettings, ScenarioError

app = typer.Typer(
    name="zenoctl",
    help="""⚛️ Observation-assisted quantum control

[bold]Workflow:[/bold]
1. [green]zenoctl list-models[/green] → the catalog systems
2. [blue]zenoctl run fig3-p2[/blue] → optimize a scenario (bundled name or YAML path)
3. [cyan]zenoctl table 3 --row 5[/cyan] → reproduce a table row
4. [magenta]zenoctl verify[/magenta] → oracle checks against the integrator

[dim]Results land in $ZENOCTL_OUTPUT_DIR (default ./results).[/dim]""",
    rich_markup_mode="rich",
    no_args_is_help=True,
)

console = Console()
p = console.print  # Shorthand for cleaner code

KNOWN_ERRORS = (ScenarioError, QuantumStateError, PropagationError, InvalidGenotypeError, OptimizationError)


def _output_root(out: Optional[Path]) -> Path:
    return out or Path(os.getenv(OUTPUT_DIR_ENV, DEFAULT_OUTPUT_DIR))


def _ga_overrides(
    base: GAConfig,
    seed: Optional[int],
    generations: Optional[int],
    population: Optional[int],
    restarts: Optional[int],
    workers: Optional[int],
) -> GAConfig:
    updates: Dict[str, Any] = {
        key: value
        for key, value in {
            "seed": seed,
            "generations": generations,
            "population": population,
            "restarts": restarts,
            "workers": workers,
        }.items()
        if value is not None
    }
    return GAConfig.model_validate({**base.model_dump(), **updates})


def _progress() -> Progress:
    return Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        TextColumn("{task.completed}/{task.total}"),
        console=console,
        transient=True,
    )


def _fmt(value: Any, digits: int = 4) -> str:
    if value is None:
        return "–"
    if isinstance(value, float):
        return f"{value:.{digits}g}"
    return str(value)


@app.command()
def version() -> None:
    """Show version information"""
    from . import __version__

    p(f"⚛️ zenoctl v{__version__}")


@app.command("list-models")
def list_models(
    config: bool = typer.Option(False, "--config", help="Dump each model as a YAML config fragment"),
) -> None:
    """List the model catalog"""
    import yaml

    from .core.models import list_models as catalog

    systems = catalog()
    if config:
        for system in systems:
            p(f"# {system.name}")
            console.print(yaml.safe_dump(system.to_config(), sort_keys=False), markup=False)
        return

    table = Table(title="⚛️ Model catalog")
    table.add_column("Model", style="cyan")
    table.add_column("Levels", justify="right")
    table.add_column("Transitions (rad/fs)")
    table.add_column("Initial → target")
    table.add_column("T_f (fs)", justify="right")
    table.add_column("α", justify="right")
    table.add_column("Description", style="dim")
    for system in systems:
        table.add_row(
            system.name,
            str(system.dim),
            ", ".join(f"{w:g}" for w in system.transition_frequencies),
            f"|{system.state_labels[system.initial_state]}⟩ → |{system.state_labels[system.target_state]}⟩",
            f"{system.t_final:g}",
            f"{system.alpha:g}",
            system.description,
        )
    p(table)


@app.command("show-model")
def show_model(name: str = typer.Argument(..., help="Catalog model name, e.g. model4")) -> None:
    """Print one model as a YAML config fragment"""
    import yaml

    from .core.models import get_model

    try:
        console.print(yaml.safe_dump(get_model(name).to_config(), sort_keys=False), markup=False)
    except Exception as e:
        p(f"❌ Error: {e}")
        raise typer.Exit(1) from e


@app.command()
def run(
    scenario_ref: str = typer.Argument(..., metavar="SCENARIO", help="YAML path or bundled scenario name"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Override the GA seed"),
    out: Optional[Path] = typer.Option(None, "--out", help="Output directory root"),
    workers: Optional[int] = typer.Option(None, "--workers", help="Worker processes for evaluation"),
    generations: Optional[int] = typer.Option(None, "--generations", help="Override GA generations"),
    population: Optional[int] = typer.Option(None, "--population", help="Override GA population"),
    restarts: Optional[int] = typer.Option(None, "--restarts", help="Override GA restarts"),
    dt: Optional[float] = typer.Option(None, "--dt", help="Override the integration step (fs)"),
    kv: bool = typer.Option(False, "--kv", help="Also print k=v result lines"),
    verbose: bool = typer.Option(False, "-v", "--verbose", help="Print optimizer progress lines"),
) -> None:
    """Optimize and evaluate a scenario"""
    from .core.experiments import run_scenario, write_run_outputs
    from .core.scenario import load_scenario

    try:
        scenario = load_scenario(scenario_ref)
        updates: Dict[str, Any] = {
            "optimizer": _ga_overrides(scenario.optimizer, seed, generations, population, restarts, workers)
        }
        if dt is not None:
            updates["propagation"] = PropagationSettings(dt=dt, sample_every=scenario.propagation.sample_every)
        scenario = scenario.model_copy(update=updates)

        p(f"⚛️ [bold blue]Running {scenario.name}[/bold blue] ({scenario.model or 'custom system'})")
        if not scenario.is_optimized:
            p("💡 Nothing to optimize, evaluating the fixed configuration")
        ga = scenario.optimizer
        total = ga.restarts * (ga.generations + 1) if scenario.is_optimized else 1
        with _progress() as progress:
            task = progress.add_task(description=f"🧬 {scenario.name}", total=total)

            def advance(record: GenerationRecord) -> None:
                progress.update(
                    task,
                    advance=1,
                    description=f"🧬 restart {record.restart + 1} · best {100 * record.best_yield:.2f}%",
                )

            outcome = run_scenario(scenario, verbose=verbose, on_generation=advance)

        directory = _output_root(out) / scenario.name
        paths = write_run_outputs(outcome, directory)
        _print_result(outcome.result)
        if kv:
            console.print(outcome.result.to_kv_stdout(), markup=False)
        p(f"📁 Wrote {len(paths)} files to {directory}")

        if not outcome.result.success:
            for violation in outcome.result.violations:
                p(f"❌ Invariant violated: {violation}")
            raise typer.Exit(1)

    except typer.Exit:
        raise
    except KNOWN_ERRORS as e:
        p(f"❌ {type(e).__name__}: {e}")
        raise typer.Exit(1) from e
    except Exception as e:
        p(f"❌ Error: {e}")
        raise typer.Exit(1) from e


def _print_result(result: Any) -> None:
    table = Table(title=f"⚛️ {result.scenario}")
    table.add_column("Quantity", style="cyan")
    table.add_column("Value", style="white")
    table.add_row("Yield O", f"{result.yield_percent:.2f}%")
    table.add_row("Fluence F", f"{result.fluence:.4g}")
    if result.observed_value is not None:
        table.add_row("Observed value", f"{result.observed_value:.4g}")
    if result.counterfactual_percent is not None:
        table.add_row("O[E,0] (observation off)", f"{result.counterfactual_percent:.2f}%")
    if result.observation_only_percent is not None:
        table.add_row("Observation only (field off)", f"{result.observation_only_percent:.2f}%")
    for name, value in result.parameters.items():
        if not name.startswith("psi"):
            table.add_row(name, f"{value:.4g}")
    status = "pass" if result.success else "fail"
    table.add_row("Invariants", f"{STATUS_DISPLAY[status]} {status}")
    p(table)


@app.command()
def table(
    number: int = typer.Argument(..., help="Table number, 1-6"),
    rows: Optional[List[str]] = typer.Option(None, "--row", help="Row key(s); default all rows"),
    seed: Optional[int] = typer.Option(None, "--seed", help="GA seed"),
    out: Optional[Path] = typer.Option(None, "--out", help="Output directory root"),
    workers: Optional[int] = typer.Option(None, "--workers", help="Worker processes for evaluation"),
    generations: Optional[int] = typer.Option(None, "--generations", help="GA generations"),
    population: Optional[int] = typer.Option(None, "--population", help="GA population"),
    restarts: Optional[int] = typer.Option(None, "--restarts", help="GA restarts"),
    dt: float = typer.Option(TABLE_DT, "--dt", help="Integration step (fs)"),
) -> None:
    """Reproduce rows of a table and write table.csv"""
    from .core.experiments import TABLE_COLUMNS, TABLE_ROWS, resolve_table_row, run_table_row
    from .core.results import write_manifest, write_table_csv

    try:
        if number not in TABLE_ROWS:
            raise ValueError(f"Unknown table {number}; choose from 1-6")
        selected = [resolve_table_row(number, r) for r in rows] if rows else list(TABLE_ROWS[number])
        ga = _ga_overrides(GAConfig(), seed, generations, population, restarts, workers)
        directory = _output_root(out) / f"table{number}"

        table_rows: List[Dict[str, Any]] = []
        failures: List[str] = []
        for row in selected:
            with _progress() as progress:
                task = progress.add_task(description=f"🧬 Table {number} · {row}", total=None)

                def advance(record: GenerationRecord, task: Any = task, progress: Progress = progress) -> None:
                    progress.update(task, description=f"🧬 Table {number} · {row} · best {100 * record.best_yield:.2f}%")

                layout, results = run_table_row(number, row, ga=ga, dt=dt, on_generation=advance)

            table_rows.append(layout)
            for k, result in enumerate(results):
                suffix = f"-{k}" if len(results) > 1 else ""
                result.write_json(directory / f"row-{row}{suffix}.json")
                failures += [f"{row}: {v}" for v in result.violations]
            p(f"✅ Row {row}: {', '.join(f'{c}={_fmt(layout.get(c))}' for c in TABLE_COLUMNS[number][1:])}")

        report = Table(title=f"⚛️ Table {number}")
        for column in TABLE_COLUMNS[number]:
            report.add_column(column, justify="right")
        for layout in table_rows:
            report.add_row(*[_fmt(layout.get(c)) for c in TABLE_COLUMNS[number]])
        p(report)

        write_table_csv(table_rows, TABLE_COLUMNS[number], directory / "table.csv")
        write_manifest(directory, "", ga.seed, table=number, rows=selected, dt=dt)
        p(f"📁 Wrote {directory / 'table.csv'}")

        if failures:
            for failure in failures:
                p(f"❌ Invariant violated: {failure}")
            raise typer.Exit(1)

    except typer.Exit:
        raise
    except KNOWN_ERRORS as e:
        p(f"❌ {type(e).__name__}: {e}")
        raise typer.Exit(1) from e
    except Exception as e:
        p(f"❌ Error: {e}")
        raise typer.Exit(1) from e


@app.command()
def traj(
    scenario_ref: str = typer.Argument(..., metavar="SCENARIO", help="YAML path or bundled scenario name"),
    csv: bool = typer.Option(True, "--csv/--no-csv", help="Write traj.csv"),
    out: Optional[Path] = typer.Option(None, "--out", help="Output directory root"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Override the GA seed"),
    generations: Optional[int] = typer.Option(None, "--generations", help="Override GA generations"),
) -> None:
    """Run a scenario and export its population/coherence trajectory"""
    from .core.experiments import run_scenario
    from .core.scenario import load_scenario

    try:
        scenario = load_scenario(scenario_ref)
        ga = _ga_overrides(scenario.optimizer, seed, generations, None, None, None)
        scenario = scenario.model_copy(update={"optimizer": ga})
        with _progress() as progress:
            progress.add_task(description=f"🧬 {scenario.name}", total=None)
            outcome = run_scenario(scenario)

        populations = outcome.trajectory.populations
        labels = outcome.system.state_labels
        summary = Table(title=f"⚛️ {scenario.name} trajectory")
        summary.add_column("t (fs)", justify="right")
        for label in labels:
            summary.add_column(f"ρ{label}{label}", justify="right")
        step = max(1, len(outcome.trajectory.times) // 10)
        for k in range(0, len(outcome.trajectory.times), step):
            summary.add_row(f"{outcome.trajectory.times[k]:.1f}", *[f"{v:.4f}" for v in populations[k]])
        p(summary)

        if csv:
            path = outcome.trajectory.to_csv(
                _output_root(out) / scenario.name / "traj.csv", coherences=scenario.output.coherences
            )
            p(f"📁 Wrote {path}")

    except KNOWN_ERRORS as e:
        p(f"❌ {type(e).__name__}: {e}")
        raise typer.Exit(1) from e
    except Exception as e:
        p(f"❌ Error: {e}")
        raise typer.Exit(1) from e


@app.command()
def verify(
    samples: int = typer.Option(200, "--samples", help="Random cases per property check"),
    seed: int = typer.Option(2006, "--seed", help="Seed for random cases"),
) -> None:
    """🔍 Check the integrator against integrator-free references"""
    from .core.oracle import verify_all

    try:
        with _progress() as progress:
            progress.add_task(description="🔍 Running oracle checks...", total=None)
            checks = verify_all(samples=samples, seed=seed)

        report = Table(title="🔍 Oracle verification")
        report.add_column("Check", style="cyan")
        report.add_column("Value", justify="right")
        report.add_column("Expected", justify="right")
        report.add_column("Tolerance", justify="right")
        report.add_column("Status")
        for check in checks:
            report.add_row(
                check.name,
                f"{check.value:.6g}",
                f"{check.expected:.6g}",
                f"{check.tolerance:.0e}",
                f"{STATUS_DISPLAY[check.status]} {check.status}",
            )
        p(report)

        failed = [c for c in checks if not c.passed]
        if failed:
            p(f"❌ {len(failed)} check(s) failed")
            raise typer.Exit(1)
        p("✅ All oracle checks passed")

    except typer.Exit:
        raise
    except Exception as e:
        p(f"❌ Error: {e}")
        raise typer.Exit(1) from e


def main() -> None:
    """Main entry point for the CLI"""
    app()


if __name__ == "__main__":
    main()
