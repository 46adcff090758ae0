"""Thermodynamics of multicomponent quantum mixtures from exponential reduced density matrices."""

__version__ = "0.1.0"

from .core_types import (  # noqa: E402
    CorrelationModel,
    MixtureState,
    MultiIndex,
    PairPotential,
    SpeciesSpec,
    Statistics,
    Tolerances,
    UnitSystem,
    build_mixture,
    multi_index,
)
from .errors import MixthermError  # noqa: E402

__all__ = [
    "CorrelationModel",
    "MixtureState",
    "MixthermError",
    "MultiIndex",
    "PairPotential",
    "SpeciesSpec",
    "Statistics",
    "Tolerances",
    "UnitSystem",
    "build_mixture",
    "multi_index",
]
