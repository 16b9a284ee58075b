"""Finite-grid digitization of bosonic fields: sampling, finite representation,
model studies and measurement-driven parameter validation."""
from . import advisor, counterexample, finiterep, hgfunc, measure, models, sampling
from .distribution import Distribution
from .estimators import DiscreteOscillator, SincInterpolator
from .finiterep import build, diagonalize
from .sampling import SamplingGrid

__version__ = "0.1.0"

__all__ = [
    "advisor",
    "counterexample",
    "finiterep",
    "hgfunc",
    "measure",
    "models",
    "sampling",
    "Distribution",
    "DiscreteOscillator",
    "SincInterpolator",
    "SamplingGrid",
    "build",
    "diagonalize",
]
