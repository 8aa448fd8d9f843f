"""Convoy sizes in the ASEP speed process: exact formulas, spectral
transition probabilities, Monte Carlo and the weakly asymmetric limit."""

from .errors import ConsistencyError, DomainError, NumericError, PreconditionError, ResourceError
from .moments import ModelParams, expected_convoy

__all__ = [
    "ModelParams",
    "expected_convoy",
    "DomainError",
    "PreconditionError",
    "NumericError",
    "ResourceError",
    "ConsistencyError",
]
__version__ = "0.1.0"
