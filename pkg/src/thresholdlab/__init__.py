"""Spectral values emerging from the thresholds of perturbed waveguides.

Two independent routes are provided: pole asymptotics built from mode
overlap matrices (:mod:`thresholdlab.overlaps`, :mod:`thresholdlab.asymptotics`)
and a direct finite-difference eigensolver (:mod:`thresholdlab.direct_solver`).
"""
from .asymptotics import Kind, SpectralPrediction, predict_group
from .errors import (
    ConfigError,
    DomainError,
    GridQualityError,
    InvalidArgumentError,
    IterationLimitError,
    NumericalFailureError,
    OrthonormalityError,
    QuadratureAccuracyError,
    ThresholdLabError,
)
from .perturbation import PerturbationPair, PotentialSpec
from .transverse import (
    build_manufactured_spectrum,
    build_oscillator_spectrum,
    build_strip_spectrum,
    group_containing,
    group_thresholds,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DomainError", "GridQualityError", "InvalidArgumentError", "IterationLimitError",
    "Kind", "NumericalFailureError", "OrthonormalityError", "PerturbationPair", "PotentialSpec",
    "QuadratureAccuracyError", "SpectralPrediction", "ThresholdLabError", "build_manufactured_spectrum",
    "build_oscillator_spectrum", "build_strip_spectrum", "group_containing", "group_thresholds",
    "predict_group",
]
