"""Simulation and verification of a strictly stationary, (L-1)-tuplewise
independent, mixing sequence whose normalized partial sums fail the CLT."""

__version__ = "0.1.0"

from .construction import (
    BlockSample,
    PathWindow,
    build_block,
    build_blocks,
    sample_x_window,
    sample_xtilde_window,
    sample_y_window,
    subblock_sums,
)
from .cylinder import CylinderSpec, Interval, parse_cylinder
from .params import ConstructionParams, NumericError, ParameterError
from .sparsifier import ThinnedPlacement, cdf_mixture, kappa_positions, moment_mixture, sparsify
from .stats import MomentReport

__all__ = [
    "BlockSample",
    "ConstructionParams",
    "CylinderSpec",
    "Interval",
    "MomentReport",
    "NumericError",
    "ParameterError",
    "PathWindow",
    "ThinnedPlacement",
    "build_block",
    "build_blocks",
    "cdf_mixture",
    "kappa_positions",
    "moment_mixture",
    "parse_cylinder",
    "sample_x_window",
    "sample_xtilde_window",
    "sample_y_window",
    "sparsify",
    "subblock_sums",
]
