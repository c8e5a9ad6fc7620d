"""Deterministic image perturbations and robustness sweeps."""
from .core import (
    KINDS,
    PerturbationSpec,
    apply,
    grid_strengths,
    parse_spec,
    standard_grid,
)
from .sweep import RobustnessReport, SweepCell, robustness_sweep

__all__ = [
    "KINDS",
    "PerturbationSpec",
    "RobustnessReport",
    "SweepCell",
    "apply",
    "grid_strengths",
    "parse_spec",
    "robustness_sweep",
    "standard_grid",
]
