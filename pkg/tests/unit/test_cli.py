"""
Tests for the zenoctl command-line interface
"""

import csv
import json
from pathlib import Path
from unittest.mock import patch

from typer.testing import CliRunner

from zenoctl import __version__
from zenoctl.cli import app
from zenoctl.core.oracle import VerificationCheck
from zenoctl.core.results import RunResult

runner = CliRunner()


def test_version() -> None:
    """Test the version command"""
    result = runner.invoke(app, ["version"])
    assert result.exit_code == 0
    assert __version__ in result.stdout


def test_list_models() -> None:
    """Test the catalog table and the YAML dump"""
    result = runner.invoke(app, ["list-models"])
    assert result.exit_code == 0
    for name in ("model1", "model2", "model3", "model4"):
        assert name in result.stdout

    dumped = runner.invoke(app, ["list-models", "--config"])
    assert dumped.exit_code == 0
    assert "energies:" in dumped.stdout


def test_show_model() -> None:
    """Test one model's config and an unknown name"""
    result = runner.invoke(app, ["show-model", "model4"])
    assert result.exit_code == 0
    assert "1'" in result.stdout

    missing = runner.invoke(app, ["show-model", "model9"])
    assert missing.exit_code == 1
    assert "❌" in missing.stdout


def test_run_missing_scenario() -> None:
    """Test that an unknown scenario exits with its error type"""
    result = runner.invoke(app, ["run", "no-such-scenario"])
    assert result.exit_code == 1
    assert "ScenarioError" in result.stdout


def test_run_fixed_scenario(tmp_path: Path) -> None:
    """Test a full run of the bundled fixed-field scenario"""
    result = runner.invoke(app, ["run", "ladder-custom", "--out", str(tmp_path), "--kv"])
    assert result.exit_code == 0, result.stdout
    assert "Nothing to optimize" in result.stdout
    assert "success=true" in result.stdout

    directory = tmp_path / "ladder-custom"
    saved = json.loads((directory / "result.json").read_text())
    assert saved["scenario"] == "ladder-custom"
    assert (directory / "traj.csv").exists()
    assert (directory / "manifest.json").exists()
    assert not (directory / "history.csv").exists()


def test_verify_passes() -> None:
    """Test the oracle report when every check passes"""
    checks = [
        VerificationCheck(name="single", passed=True, value=0.5, expected=0.5, tolerance=1e-10)
    ]
    with patch("zenoctl.core.oracle.verify_all", return_value=checks) as mock_verify:
        result = runner.invoke(app, ["verify", "--samples", "10", "--seed", "1"])
    assert result.exit_code == 0
    assert "All oracle checks passed" in result.stdout
    mock_verify.assert_called_once_with(samples=10, seed=1)


def test_verify_reports_failures() -> None:
    """Test the exit code when a check fails"""
    checks = [
        VerificationCheck(name="single", passed=True, value=0.5, expected=0.5, tolerance=1e-10),
        VerificationCheck(name="engines", passed=False, value=1e-3, expected=0.0, tolerance=1e-6),
    ]
    with patch("zenoctl.core.oracle.verify_all", return_value=checks):
        result = runner.invoke(app, ["verify"])
    assert result.exit_code == 1
    assert "1 check(s) failed" in result.stdout


def test_table_unknown_number() -> None:
    """Test rejection of tables outside 1-6"""
    result = runner.invoke(app, ["table", "9"])
    assert result.exit_code == 1
    assert "Unknown table" in result.stdout


def test_table_writes_csv(tmp_path: Path) -> None:
    """Test the table command with the row runner patched out"""
    row = {"kappa": 0.3, "O_percent": 90.0, "P1p_percent": 4.2, "F": 0.5}
    fake = RunResult(scenario="table6-kappa0.3", model="model4", yield_fraction=0.9, fluence=0.5)
    with patch("zenoctl.core.experiments.run_table_row", return_value=(row, [fake])) as mock_row:
        result = runner.invoke(
            app, ["table", "6", "--row", "0.3", "--out", str(tmp_path), "--seed", "5"]
        )

    assert result.exit_code == 0, result.stdout
    assert mock_row.call_args.args == (6, "0.30")
    assert mock_row.call_args.kwargs["ga"].seed == 5

    directory = tmp_path / "table6"
    with open(directory / "table.csv") as handle:
        rows = list(csv.reader(handle))
    assert rows == [["kappa", "O_percent", "P1p_percent", "F"], ["0.3", "90", "4.2", "0.5"]]
    assert (directory / "row-0.30.json").exists()
    assert json.loads((directory / "manifest.json").read_text())["table"] == 6
