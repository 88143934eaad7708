"""Resonance poles and time-domain decay of a periodically driven
two-level Fano-Anderson chain."""

__version__ = "0.1.0"

from .dispersion import (  # noqa: F401
    DispersionVariant,
    Pole,
    converge_truncation,
    find_pole,
)
from .evolution import EvolutionConfig, SurvivalSeries, evolve  # noqa: F401
from .greens import Sheet, zeta0, zeta0_quadrature  # noqa: F401
from .model import ModelConfig, classify_levels, replica_band, validate  # noqa: F401
from .selfenergy import FloquetTruncation, bessel_j  # noqa: F401
