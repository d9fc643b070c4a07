"""xormmap - Marginal MAP estimation with XOR-hashed replicated oracles."""

from .baselines import exact_mmap, saa_solve, score_solution
from .errors import (
    BudgetExceededError,
    EnumerationBudgetError,
    InstanceParseError,
    InvalidParameterError,
    MalformedInstanceError,
    XorMmapError,
)
from .estimator import EstimateReport, EstimatorConfig, RunRecord, xor_k, xor_mmap
from .instances import read_instance, write_instance
from .model import CnfFormula, IsingGrid, MmapInstance, VarSpace
from .oracle import Engine
from .search import Budget
from .variants import Variant, VariantConfig, xor_mmap_variant
from .weighted import WeightedEstimateReport, weighted_mmap

# Version is managed by hatch-vcs and set during build
try:
    from ._version import __version__
except ImportError:
    # Fallback for development installs without build
    __version__ = "0.0.0.dev0+unknown"

__all__ = [
    "Budget",
    "BudgetExceededError",
    "CnfFormula",
    "Engine",
    "EnumerationBudgetError",
    "EstimateReport",
    "EstimatorConfig",
    "InstanceParseError",
    "InvalidParameterError",
    "IsingGrid",
    "MalformedInstanceError",
    "MmapInstance",
    "RunRecord",
    "VarSpace",
    "Variant",
    "VariantConfig",
    "WeightedEstimateReport",
    "XorMmapError",
    "exact_mmap",
    "read_instance",
    "saa_solve",
    "score_solution",
    "weighted_mmap",
    "write_instance",
    "xor_k",
    "xor_mmap",
    "xor_mmap_variant",
    "__version__",
]
