"""Group-sparse Poisson deconvolution of polarized single-molecule images."""

from ._core import (
    GROUP_SIZE,
    BasisParams,
    BasisStack,
    ConfigError,
    DesignOperator,
    Error,
    EstimationError,
    EvaluationError,
    FormatError,
    ParameterError,
    PlacementError,
    ShapeError,
    SolverError,
    analyze_frame,
    cone_angle_from_gamma,
    deconvolve,
    gamma_from_cone_angle,
    generate_synthetic_basis,
    group_norm,
    load_basis,
    moments_from_cone,
    moments_to_orientation,
    neg_log_likelihood,
    project_soc,
    prox_group_norm,
    render_scene,
    sample_poisson,
)

__all__ = [
    "GROUP_SIZE",
    "BasisParams",
    "BasisStack",
    "ConfigError",
    "DesignOperator",
    "Error",
    "EstimationError",
    "EvaluationError",
    "FormatError",
    "ParameterError",
    "PlacementError",
    "ShapeError",
    "SolverError",
    "analyze_frame",
    "cone_angle_from_gamma",
    "deconvolve",
    "gamma_from_cone_angle",
    "generate_synthetic_basis",
    "group_norm",
    "load_basis",
    "moments_from_cone",
    "moments_to_orientation",
    "neg_log_likelihood",
    "project_soc",
    "prox_group_norm",
    "render_scene",
    "sample_poisson",
]
