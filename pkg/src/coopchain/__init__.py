"""Cooperative single-photon emission from a one-dimensional atomic chain."""

from .errors import CoopChainError, DivergenceError, DomainError, NumericalFailure
from .geometry import ChainGeometry, excitation_phase, pair_separation

__version__ = "0.1.0"

__all__ = [
    "ChainGeometry",
    "CoopChainError",
    "DivergenceError",
    "DomainError",
    "NumericalFailure",
    "excitation_phase",
    "pair_separation",
    "__version__",
]
