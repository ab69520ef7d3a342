"""Simulation and measurement tools for the randomly growing Gaussian cluster."""

__version__ = "0.1.0"

from clusterlab.process import (
    Cluster,
    GrowthConfig,
    attachment_tree_length,
    gaussian_tail_upper,
    grow,
    level,
    levels,
    radius,
    sigma,
    trial_seed,
)

__all__ = [
    "Cluster",
    "GrowthConfig",
    "attachment_tree_length",
    "gaussian_tail_upper",
    "grow",
    "level",
    "levels",
    "radius",
    "sigma",
    "trial_seed",
]
