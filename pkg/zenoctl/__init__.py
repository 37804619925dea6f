"""
⚛️ zeno-control - Observation-assisted quantum control

Density-matrix propagation of small multilevel systems under shaped fields,
instantaneous and continuous quantum observations, and genetic-algorithm
optimization of fields and observations.
"""

__version__ = "0.1.0"

from .core.field import RectangularField, ShapedField
from .core.models import SystemSpec, get_model
from .core.quantum import DensityMatrix, HermitianOperator, Projector

__all__ = [
    "__version__",
    "DensityMatrix",
    "HermitianOperator",
    "Projector",
    "ShapedField",
    "RectangularField",
    "SystemSpec",
    "get_model",
]
