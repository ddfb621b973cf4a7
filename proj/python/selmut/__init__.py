"""Particle method for non-local advection-selection-mutation equations."""

from ._core import (
    SelmutError,
    UsageError,
    fit_convergence_order,
    format_number,
    predict_limit_mass,
    preset_names,
    reconstruct,
    run,
    simulate,
    verify_moments,
)

__all__ = [
    "SelmutError",
    "UsageError",
    "fit_convergence_order",
    "format_number",
    "predict_limit_mass",
    "preset_names",
    "reconstruct",
    "run",
    "simulate",
    "verify_moments",
]
