"""Density-matrix reconstruction from displaced photon number distributions."""
from .errors import (
    CoverageError,
    DomainError,
    EstimationError,
    PhasetomoError,
    SingularSystemError,
    ValidationError,
)
from .forward import RadialProfile, SampleSet, density, fourier_component, sample
from .recon_tomogram import Tomogram, analytic_tomogram
from .states import DensityMatrix, random_density_matrix, validate

__version__ = "0.1.0"

__all__ = [
    "CoverageError",
    "DomainError",
    "EstimationError",
    "PhasetomoError",
    "SingularSystemError",
    "ValidationError",
    "RadialProfile",
    "SampleSet",
    "density",
    "fourier_component",
    "sample",
    "Tomogram",
    "analytic_tomogram",
    "DensityMatrix",
    "random_density_matrix",
    "validate",
]
