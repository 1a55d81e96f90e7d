"""Radial basis function networks used as per-agent function approximators."""

from .rbf import (
    RbfBasis,
    RbfNetwork,
    TuningParams,
    activation,
    estimate,
    prediction_error_hbar,
    project,
    tune_weights,
)

__all__ = [
    "RbfBasis",
    "RbfNetwork",
    "TuningParams",
    "activation",
    "estimate",
    "prediction_error_hbar",
    "project",
    "tune_weights",
]
