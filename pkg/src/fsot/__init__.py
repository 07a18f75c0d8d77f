"""Multi-class point-set optimization via filtered sliced optimal transport.

The package optimizes point sets toward (mixtures of) target densities by
stochastic descent on 1D transport problems: filter a subset by thresholding
a class function, project it and its target onto a random axis, and move each
point toward its rank-matched target bin. Applications include blue-noise
sampling, color stippling, progressive sequences, Monte-Carlo integration,
and perceptual rendering-error tiles.
"""

from .core import (
    Boundary,
    Domain,
    ExtendedPointSet,
    load_points,
    new_random_set,
    save_points,
    wrap,
)
from .classes import (
    BoxFunction,
    Class,
    ClassConfig,
    PiecewiseLinearFunction,
    StaircaseFunction,
    filter_points,
    sample_threshold,
    select_class,
)
from .targets import (
    TargetDensity,
    build_bins,
    empirical_density,
    grid_density,
    project,
    sample_direction,
    sample_target,
    uniform_density,
)
from .sliced_ot import SlicedStep, compute_offsets, gamma_factors, offset_vectors, w2_sq_1d
from .optimizer import OptimizerConfig, RunReport, default_iterations, estimate_loss, run
from .analysis import (
    PiecewiseLinear1D,
    SpectrumResult,
    check_error_bound_1d,
    check_filtered_bound_1d,
    image_power_spectrum,
    low_freq_power,
    power_spectrum,
    w1_1d,
)
from .perceptual import Kernel, TileSpec, build_pixel_classes, optimize_tile, perceived_error_image

__version__ = "0.1.0"

__all__ = [
    "Boundary",
    "BoxFunction",
    "Class",
    "ClassConfig",
    "Domain",
    "ExtendedPointSet",
    "Kernel",
    "OptimizerConfig",
    "PiecewiseLinear1D",
    "PiecewiseLinearFunction",
    "RunReport",
    "SlicedStep",
    "SpectrumResult",
    "StaircaseFunction",
    "TargetDensity",
    "TileSpec",
    "build_bins",
    "build_pixel_classes",
    "check_error_bound_1d",
    "check_filtered_bound_1d",
    "compute_offsets",
    "default_iterations",
    "empirical_density",
    "estimate_loss",
    "filter_points",
    "gamma_factors",
    "grid_density",
    "image_power_spectrum",
    "load_points",
    "low_freq_power",
    "new_random_set",
    "offset_vectors",
    "optimize_tile",
    "perceived_error_image",
    "power_spectrum",
    "project",
    "run",
    "sample_direction",
    "sample_target",
    "sample_threshold",
    "save_points",
    "select_class",
    "uniform_density",
    "w1_1d",
    "w2_sq_1d",
    "wrap",
]
