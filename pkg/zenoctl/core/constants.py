"""Constants used throughout the zenoctl codebase."""

import math

# Numerical tolerances for state and operator validation
HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
POSITIVITY_TOL = 1e-9
# Propagated states: fixed-step RK4 does not preserve positivity exactly
INTEGRATOR_POSITIVITY_TOL = 1e-6
IDEMPOTENCY_TOL = 1e-10
NORM_TOL = 1e-12

# Eigenvalues closer than this (system energy units) share a degeneracy group
DEFAULT_DEGENERACY_TOL = 1e-9

# Integration defaults (fs)
DEFAULT_DT = 0.01
DEFAULT_SAMPLE_EVERY = 100

# Search bounds for control parameters (system units)
AMPLITUDE_BOUNDS = (0.0, 2.0)
PHASE_BOUNDS = (0.0, 2.0 * math.pi)
GAMMA_BOUNDS = (0.0, 5.0)
PROJECTOR_GENE_BOUNDS = (-1.0, 1.0)

# Genetic algorithm defaults
DEFAULT_POPULATION = 60
DEFAULT_GENERATIONS = 200
DEFAULT_TOURNAMENT_SIZE = 3
DEFAULT_CROSSOVER_RATE = 0.8
DEFAULT_MUTATION_RATE = 0.15
DEFAULT_MUTATION_SCALE = 0.05
DEFAULT_ELITISM = 2
DEFAULT_RESTARTS = 4
DEFAULT_SEED = 2006

# Environment overrides
WORKERS_ENV = "ZENOCTL_WORKERS"
OUTPUT_DIR_ENV = "ZENOCTL_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "results"

# Status display emojis (for CLI output)
STATUS_DISPLAY = {
    "pass": "✅",
    "fail": "❌",
    "warn": "⚠️",
}

# Step used by the table reproductions and bundled scenarios (fs)
TABLE_DT = 0.02
