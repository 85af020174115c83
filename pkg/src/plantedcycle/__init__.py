"""Planted dense cycle laboratory: samplers, exact small-n oracles, and threshold sweeps."""

from plantedcycle.model import (
    Adjacency,
    Params,
    build_cycle,
    circ_dist,
    degrade,
    interpolate_params,
    sample_null,
    sample_planted,
)
from plantedcycle.seeding import substream

__all__ = [
    "Adjacency",
    "Params",
    "build_cycle",
    "circ_dist",
    "degrade",
    "interpolate_params",
    "sample_null",
    "sample_planted",
    "substream",
]

__version__ = "0.1.0"
