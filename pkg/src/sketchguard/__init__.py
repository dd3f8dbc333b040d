"""Recoverable Count-Min Sketches: redundancy, batched updates, simulation and analysis."""

from .sketch import (
    CounterOverflowError,
    HashFamily,
    InconsistentRecoveryError,
    ParameterMismatchError,
    Sketch,
    SketchParams,
    derive_dims,
    linear_combine,
    merge,
    mix64,
)

__version__ = "0.1.0"
