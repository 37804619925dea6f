"""
Tests for run records, table CSVs and manifests
"""

import csv
import json
import re
from pathlib import Path

from zenoctl import __version__
from zenoctl.core.results import (
    RunResult,
    format_utc_now,
    percent,
    write_manifest,
    write_table_csv,
)


def _result(**overrides: object) -> RunResult:
    data = {
        "scenario": "demo",
        "model": "model1",
        "yield_fraction": 0.83456,
        "fluence": 1.25,
        "observed_value": 0.4,
        "counterfactual_fraction": 0.1234,
        "parameters": {"A1": 0.5, "psi1_re0": 0.2},
        "populations": [0.1, 0.06544, 0.0, 0.0, 0.83456],
    }
    data.update(overrides)
    return RunResult(**data)  # type: ignore[arg-type]


def test_percent() -> None:
    """Test fraction to percent rounding"""
    assert percent(0.22194) == 22.19
    assert percent(None) is None


def test_result_properties() -> None:
    """Test derived percentages and success"""
    result = _result()
    assert result.yield_percent == 83.46
    assert result.counterfactual_percent == 12.34
    assert result.observation_only_percent is None
    assert result.population_percent(4) == 83.46
    assert result.success
    assert not _result(violations=["trace drift 1e-6"]).success


def test_to_dict_and_back() -> None:
    """Test the JSON form, ignoring derived keys on load"""
    data = _result().to_dict()
    assert data["yield_percent"] == 83.46
    assert data["success"] is True
    restored = RunResult.from_dict({**data, "unexpected": 1})
    assert restored == _result()


def test_write_json(tmp_path: Path) -> None:
    """Test result.json creation in a new directory"""
    path = _result().write_json(tmp_path / "nested" / "result.json")
    assert json.loads(path.read_text())["scenario"] == "demo"


def test_kv_stdout() -> None:
    """Test k=v lines, hiding projector genes"""
    lines = _result(violations=["bad"]).to_kv_stdout().splitlines()
    assert "yield_percent=83.46" in lines
    assert "counterfactual_percent=12.34" in lines
    assert "A1=0.5" in lines
    assert "success=false" in lines
    assert "violations=bad" in lines
    assert not any(line.startswith("psi") for line in lines)


def test_write_table_csv(tmp_path: Path) -> None:
    """Test column order and empty cells"""
    rows = [{"N": 1, "O_percent": 50.0}, {"N": 3, "O_percent": 62.5, "F": None}]
    path = write_table_csv(rows, ("N", "O_percent", "F"), tmp_path / "table.csv")
    with open(path) as handle:
        content = list(csv.reader(handle))
    assert content == [["N", "O_percent", "F"], ["1", "50", ""], ["3", "62.5", ""]]


def test_write_manifest(tmp_path: Path) -> None:
    """Test manifest fields"""
    path = write_manifest(tmp_path, "abc123", 2006, scenario="demo")
    manifest = json.loads(path.read_text())
    assert manifest["config_hash"] == "abc123"
    assert manifest["seed"] == 2006
    assert manifest["version"] == __version__
    assert manifest["scenario"] == "demo"
    assert re.fullmatch(r"\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}Z", manifest["created_at"])


def test_format_utc_now() -> None:
    """Test the ISO-8601 UTC timestamp"""
    value = format_utc_now()
    assert value.endswith("Z")
    assert len(value) == 20
