"""Kerr-nonlinear nanomechanical interferometry: damped moment formulas,
output-quadrature statistics, estimation precision and a Fock-space oracle."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    CutoffError,
    DomainError,
    FitError,
    KerrMetroError,
    OracleError,
    SeriesTruncationError,
)
from .model import ModelParams, PhysicalParams, RegimeReport, classify_regime, derive_model_params
from .kerr import KerrPoint, ModeMoments, first_moment, mode_moments, q_function
from .interferometer import Quadrature, QuadratureStats, output_stats, stats_at
from .estimation import PrecisionPoint, Regime, ScalingFit, fit_scaling_exponent, precision

__all__ = [
    "ConfigError", "CutoffError", "DomainError", "FitError", "KerrMetroError", "OracleError",
    "SeriesTruncationError", "ModelParams", "PhysicalParams", "RegimeReport", "classify_regime",
    "derive_model_params", "KerrPoint", "ModeMoments", "first_moment", "mode_moments", "q_function",
    "Quadrature", "QuadratureStats", "output_stats", "stats_at", "PrecisionPoint", "Regime",
    "ScalingFit", "fit_scaling_exponent", "precision",
]
