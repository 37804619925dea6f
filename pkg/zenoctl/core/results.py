"""
📊 Run results - RunResult records, table CSVs and run manifests

Yields are fractions internally and percent (two decimals) at I/O.
"""

import csv
import json
import platform
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

# ISO-8601 UTC, second resolution
MANIFEST_TIME_FORMAT = "%Y-%m-%dT%H:%M:%SZ"


def format_utc_now() -> str:
    """Current UTC time for manifests"""
    return datetime.now(timezone.utc).strftime(MANIFEST_TIME_FORMAT)


def percent(value: Optional[float]) -> Optional[float]:
    """Fraction → percent rounded to two decimals"""
    return None if value is None else round(100.0 * value, 2)


@dataclass
class RunResult:
    """Outcome of one scenario run"""

    scenario: str
    model: str
    yield_fraction: float
    fluence: float
    cost: Optional[float] = None
    observed_value: Optional[float] = None  # Tr[ρ(T_m)A] just before the first fixed observation
    counterfactual_fraction: Optional[float] = None  # same field, observations disabled
    observation_only_fraction: Optional[float] = None  # same observations, field off
    parameters: Dict[str, float] = field(default_factory=dict)
    populations: List[float] = field(default_factory=list)
    extras: Dict[str, Any] = field(default_factory=dict)
    violations: List[str] = field(default_factory=list)
    seed: Optional[int] = None
    evaluations: int = 0
    config_hash: str = ""

    @property
    def success(self) -> bool:
        return not self.violations

    @property
    def yield_percent(self) -> float:
        return round(100.0 * self.yield_fraction, 2)

    @property
    def counterfactual_percent(self) -> Optional[float]:
        return percent(self.counterfactual_fraction)

    @property
    def observation_only_percent(self) -> Optional[float]:
        return percent(self.observation_only_fraction)

    def population_percent(self, index: int) -> float:
        return round(100.0 * self.populations[index], 2)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["yield_percent"] = self.yield_percent
        data["counterfactual_percent"] = self.counterfactual_percent
        data["observation_only_percent"] = self.observation_only_percent
        data["success"] = self.success
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunResult":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in data.items() if k in known})

    def write_json(self, path: Path) -> Path:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2, default=float) + "\n")
        return path

    def to_kv_stdout(self) -> str:
        """k=v lines for shell pipelines"""
        lines = [
            f"scenario={self.scenario}",
            f"model={self.model}",
            f"yield_percent={self.yield_percent:.2f}",
            f"fluence={self.fluence:.6g}",
        ]
        if self.observed_value is not None:
            lines.append(f"observed_value={self.observed_value:.6g}")
        if self.counterfactual_percent is not None:
            lines.append(f"counterfactual_percent={self.counterfactual_percent:.2f}")
        if self.observation_only_percent is not None:
            lines.append(f"observation_only_percent={self.observation_only_percent:.2f}")
        for name, value in self.parameters.items():
            if not name.startswith("psi"):
                lines.append(f"{name}={value:.6g}")
        lines.append(f"success={str(self.success).lower()}")
        if self.violations:
            lines.append(f"violations={'; '.join(self.violations)}")
        return "\n".join(lines)


def write_table_csv(rows: Sequence[Dict[str, Any]], columns: Sequence[str], path: Path) -> Path:
    """One table row per dict; missing cells stay empty"""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(c)) for c in columns])
    return path


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def build_manifest(
    config_hash: str, seed: Optional[int], extra: Optional[Dict[str, Any]] = None
) -> Dict[str, Any]:
    from .. import __version__

    manifest: Dict[str, Any] = {
        "config_hash": config_hash,
        "seed": seed,
        "version": __version__,
        "created_at": format_utc_now(),
        "python": platform.python_version(),
    }
    if extra:
        manifest.update(extra)
    return manifest


def write_manifest(directory: Path, config_hash: str, seed: Optional[int], **extra: Any) -> Path:
    """manifest.json beside the run outputs"""
    path = directory / "manifest.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(build_manifest(config_hash, seed, extra), indent=2) + "\n")
    return path
