"""
🧬 Genetic-algorithm closed-loop optimizer

Tournament selection, uniform crossover, Gaussian mutation and elitism over a
bounded gene space. Candidates are evaluated in whole-population batches
(optionally split across worker processes); all random draws happen in the
driver so results depend only on the seed.
"""

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, model_validator

from .constants import (
    DEFAULT_CROSSOVER_RATE,
    DEFAULT_ELITISM,
    DEFAULT_GENERATIONS,
    DEFAULT_MUTATION_RATE,
    DEFAULT_MUTATION_SCALE,
    DEFAULT_POPULATION,
    DEFAULT_RESTARTS,
    DEFAULT_SEED,
    DEFAULT_TOURNAMENT_SIZE,
    WORKERS_ENV,
)

ArrayLike = Union[float, np.ndarray]
BatchEvaluator = Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]]


class CostKind(str, Enum):
    """Objective functionals"""

    FIELD = "field_cost"  # |O − O_T|² + αF
    PLAN = "plan_cost"  # |O − 100%|²
    JOINT = "joint_cost"  # |O − O_T|², field held fixed
    WINDOW = "window_cost"  # |O − 100%|² + αA²


@dataclass(frozen=True)
class CostSpec:
    """Objective kind, target yield (fraction) and fluence weight"""

    kind: CostKind
    target: float = 1.0
    alpha: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", CostKind(self.kind))
        if not 0.0 <= self.target <= 1.0:
            raise ValueError(f"Target yield must be a fraction in [0, 1], got {self.target}")
        if self.alpha < 0:
            raise ValueError(f"Fluence weight must be >= 0, got {self.alpha}")

    @property
    def uses_fluence(self) -> bool:
        return self.kind in (CostKind.FIELD, CostKind.WINDOW)


def evaluate_cost(spec: CostSpec, yield_: ArrayLike, fluence: ArrayLike) -> ArrayLike:
    """Objective value for yield O and fluence F (A² for rectangular pulses)"""
    cost = (np.asarray(yield_, dtype=float) - spec.target) ** 2
    if spec.uses_fluence:
        cost = cost + spec.alpha * np.asarray(fluence, dtype=float)
    return float(cost) if np.ndim(cost) == 0 else cost


class GAConfig(BaseModel):
    """Genetic algorithm hyperparameters"""

    population: int = Field(DEFAULT_POPULATION, ge=2)
    generations: int = Field(DEFAULT_GENERATIONS, ge=0)
    tournament_size: int = Field(DEFAULT_TOURNAMENT_SIZE, ge=1)
    crossover_rate: float = Field(DEFAULT_CROSSOVER_RATE, ge=0.0, le=1.0)
    mutation_rate: float = Field(DEFAULT_MUTATION_RATE, ge=0.0, le=1.0)
    mutation_scale: float = Field(DEFAULT_MUTATION_SCALE, gt=0.0)
    elitism: int = Field(DEFAULT_ELITISM, ge=1)
    seed: int = DEFAULT_SEED
    restarts: int = Field(DEFAULT_RESTARTS, ge=1)
    workers: int = Field(default_factory=lambda: int(os.getenv(WORKERS_ENV, "1")), ge=1)

    @model_validator(mode="after")
    def check_sizes(self) -> "GAConfig":
        if self.elitism >= self.population:
            raise ValueError("elitism must be smaller than the population")
        if self.tournament_size > self.population:
            raise ValueError("tournament_size cannot exceed the population")
        return self


@dataclass(frozen=True)
class GeneSpace:
    """Named genes with finite bounds; periodic genes wrap instead of clipping"""

    names: Tuple[str, ...]
    lower: np.ndarray
    upper: np.ndarray
    periodic: np.ndarray

    def __post_init__(self) -> None:
        lower = np.array(self.lower, dtype=float)
        upper = np.array(self.upper, dtype=float)
        periodic = np.array(self.periodic, dtype=bool)
        if not len(self.names) == lower.size == upper.size == periodic.size:
            raise ValueError("Gene names, bounds and periodic flags must have equal length")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ValueError("Gene bounds must be finite")
        if np.any(upper <= lower):
            bad = self.names[int(np.argmax(upper <= lower))]
            raise ValueError(f"Gene {bad!r} needs lower < upper")
        for array in (lower, upper, periodic):
            array.setflags(write=False)
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "periodic", periodic)

    @classmethod
    def build(cls, genes: Sequence[Tuple[str, float, float, bool]]) -> "GeneSpace":
        """From (name, lower, upper, periodic) tuples"""
        names = tuple(g[0] for g in genes)
        return cls(
            names=names,
            lower=np.array([g[1] for g in genes], dtype=float),
            upper=np.array([g[2] for g in genes], dtype=float),
            periodic=np.array([g[3] for g in genes], dtype=bool),
        )

    @property
    def size(self) -> int:
        return len(self.names)

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def random(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return self.lower + rng.random((count, self.size)) * self.width

    def repair(self, genes: np.ndarray) -> np.ndarray:
        """Wrap periodic genes into [lower, upper) and clip the rest"""
        wrapped = self.lower + np.mod(genes - self.lower, self.width)
        clipped = np.clip(genes, self.lower, self.upper)
        return np.where(self.periodic, wrapped, clipped)

    def contains(self, genes: np.ndarray) -> bool:
        return bool(np.all(genes >= self.lower) and np.all(genes <= self.upper))


class Pointwise:
    """Adapt a single-genotype function g → (O, F) to the batch interface"""

    def __init__(self, function: Callable[[np.ndarray], Tuple[float, float]]):
        self.function = function

    def __call__(self, genes: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        results = [self.function(row) for row in genes]
        return (
            np.array([r[0] for r in results], dtype=float),
            np.array([r[1] for r in results], dtype=float),
        )


@dataclass
class OptimizationError(Exception):
    """Evaluator failure, with the genotype that triggered it"""

    message: str
    genotype: Optional[np.ndarray] = None

    def __str__(self) -> str:
        if self.genotype is None:
            return self.message
        genes = np.array2string(np.asarray(self.genotype), precision=6, separator=", ")
        return f"{self.message} for genotype {genes}"


@dataclass
class GenerationRecord:
    """Best and mean cost of one generation"""

    restart: int
    generation: int
    best_cost: float
    best_yield: float
    mean_cost: float


@dataclass
class OptimizationResult:
    """Best candidate over all restarts plus the search history"""

    best_genes: np.ndarray
    best_cost: float
    best_yield: float
    best_fluence: float
    history: List[GenerationRecord] = field(default_factory=list)
    evaluations: int = 0
    best_restart: int = 0
    restart_costs: List[float] = field(default_factory=list)

    @property
    def best_history(self) -> List[float]:
        """Per-generation best cost of the winning restart"""
        return [r.best_cost for r in self.history if r.restart == self.best_restart]


class _Evaluation:
    """Batch evaluation with optional worker processes and failure localization"""

    def __init__(self, evaluator: BatchEvaluator, workers: int):
        self.evaluator = evaluator
        self.workers = workers
        self.executor: Optional[ProcessPoolExecutor] = None
        self.count = 0

    def __enter__(self) -> "_Evaluation":
        if self.workers > 1:
            self.executor = ProcessPoolExecutor(max_workers=self.workers)
        return self

    def __exit__(self, *exc: object) -> None:
        if self.executor is not None:
            self.executor.shutdown()

    def __call__(self, genes: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        self.count += len(genes)
        try:
            if self.executor is not None and len(genes) > 1:
                chunks = np.array_split(genes, min(self.workers, len(genes)))
                parts = list(self.executor.map(self.evaluator, chunks))
                yields = np.concatenate([p[0] for p in parts])
                fluences = np.concatenate([p[1] for p in parts])
            else:
                yields, fluences = self.evaluator(genes)
        except Exception as e:
            raise self._locate(genes, e) from e

        yields = np.asarray(yields, dtype=float)
        fluences = np.asarray(fluences, dtype=float)
        if yields.shape != (len(genes),) or fluences.shape != (len(genes),):
            raise OptimizationError(
                f"Evaluator returned shapes {yields.shape}, {fluences.shape} for {len(genes)} candidates"
            )
        bad = ~(np.isfinite(yields) & np.isfinite(fluences))
        if np.any(bad):
            raise OptimizationError("Evaluator returned a non-finite yield or fluence", genes[int(np.argmax(bad))])
        return yields, fluences

    def _locate(self, genes: np.ndarray, error: Exception) -> OptimizationError:
        for row in genes:
            try:
                self.evaluator(row[None, :])
            except Exception as e:
                return OptimizationError(f"Evaluation failed: {e}", row)
        return OptimizationError(f"Evaluation failed: {error}")


def _tournament(rng: np.random.Generator, costs: np.ndarray, count: int, size: int) -> np.ndarray:
    entrants = rng.integers(len(costs), size=(count, size))
    return entrants[np.arange(count), np.argmin(costs[entrants], axis=1)]


def _offspring(
    rng: np.random.Generator,
    population: np.ndarray,
    costs: np.ndarray,
    count: int,
    space: GeneSpace,
    ga: GAConfig,
) -> np.ndarray:
    first = population[_tournament(rng, costs, count, ga.tournament_size)]
    second = population[_tournament(rng, costs, count, ga.tournament_size)]
    crossed = rng.random(count) < ga.crossover_rate
    mask = (rng.random((count, space.size)) < 0.5) & crossed[:, None]
    children = np.where(mask, second, first)
    mutate = rng.random((count, space.size)) < ga.mutation_rate
    noise = rng.normal(size=(count, space.size)) * ga.mutation_scale * space.width
    return space.repair(children + mutate * noise)


def optimize(
    cost: CostSpec,
    space: GeneSpace,
    evaluator: BatchEvaluator,
    ga: Optional[GAConfig] = None,
    on_generation: Optional[Callable[[GenerationRecord], None]] = None,
    verbose: bool = False,
) -> OptimizationResult:
    """Minimize cost over space; evaluator maps (B, genes) to (yields, fluences)"""
    ga = ga or GAConfig()
    seeds = np.random.SeedSequence(ga.seed).spawn(ga.restarts)
    history: List[GenerationRecord] = []
    best: Optional[Tuple[float, np.ndarray, float, float, int]] = None
    restart_costs: List[float] = []

    with _Evaluation(evaluator, ga.workers) as evaluate:
        for restart, seed in enumerate(seeds):
            rng = np.random.default_rng(seed)
            population = space.random(rng, ga.population)
            yields, fluences = evaluate(population)
            costs = np.asarray(evaluate_cost(cost, yields, fluences))

            for generation in range(ga.generations + 1):
                if generation > 0:
                    elite = np.argsort(costs, kind="stable")[: ga.elitism]
                    children = _offspring(
                        rng, population, costs, ga.population - ga.elitism, space, ga
                    )
                    child_yields, child_fluences = evaluate(children)
                    population = np.concatenate([population[elite], children])
                    yields = np.concatenate([yields[elite], child_yields])
                    fluences = np.concatenate([fluences[elite], child_fluences])
                    costs = np.concatenate(
                        [costs[elite], np.asarray(evaluate_cost(cost, child_yields, child_fluences))]
                    )

                leader = int(np.argmin(costs))
                record = GenerationRecord(
                    restart=restart,
                    generation=generation,
                    best_cost=float(costs[leader]),
                    best_yield=float(yields[leader]),
                    mean_cost=float(np.mean(costs)),
                )
                history.append(record)
                if on_generation is not None:
                    on_generation(record)

            leader = int(np.argmin(costs))
            restart_costs.append(float(costs[leader]))
            if verbose:
                print(
                    f"🧬 Restart {restart + 1}/{ga.restarts}: cost {costs[leader]:.6f}, "
                    f"yield {100 * yields[leader]:.2f}%"
                )
            if best is None or costs[leader] < best[0]:
                best = (
                    float(costs[leader]),
                    population[leader].copy(),
                    float(yields[leader]),
                    float(fluences[leader]),
                    restart,
                )

    assert best is not None
    return OptimizationResult(
        best_genes=best[1],
        best_cost=best[0],
        best_yield=best[2],
        best_fluence=best[3],
        history=history,
        evaluations=evaluate.count,
        best_restart=best[4],
        restart_costs=restart_costs,
    )


def write_history_csv(result: OptimizationResult, path: Path) -> Path:
    """Columns restart, generation, best_cost, best_yield_percent, mean_cost"""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["restart", "generation", "best_cost", "best_yield_percent", "mean_cost"])
        for r in result.history:
            writer.writerow(
                [r.restart, r.generation, f"{r.best_cost:.10e}", f"{100 * r.best_yield:.4f}", f"{r.mean_cost:.10e}"]
            )
    return path
