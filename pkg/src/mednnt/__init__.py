"""Path-specific number-needed-to-treat indices via stacked M-estimation."""
from .core import (
    INDEX_NAMES, INFINITE, PARAM_NAMES, Dataset, EmptyGroup, ExtendedIndex,
    ObservationRecord, ParameterVector, g_transform, pack, unpack,
)
from .effects import EffectSet, closed_form_example
from .inference import confidence_intervals, sandwich
from .links import LinkFamily
from .simulate import SimulationConfig, coverage_study, generate, mc_oracle
from .stack import solve

__version__ = "0.1.0"

__all__ = [
    "INDEX_NAMES", "INFINITE", "PARAM_NAMES", "Dataset", "EmptyGroup", "EffectSet",
    "ExtendedIndex", "LinkFamily", "ObservationRecord", "ParameterVector",
    "SimulationConfig", "closed_form_example", "confidence_intervals", "coverage_study",
    "g_transform", "generate", "mc_oracle", "pack", "sandwich", "solve", "unpack",
]
