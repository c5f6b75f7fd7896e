"""Time-frequency shift operators sum c_lam U_lam with absolutely summable coefficients."""
from .core import (
    TFOperator,
    TFPoint,
    Weight,
    adjoint,
    axpy,
    coeff_norms,
    compose,
    norm_av,
    power,
    power_norm_bound,
    scale,
    support_radius,
    truncate,
    unit,
)
from .exceptions import (
    ConvergenceError,
    DimensionMismatchError,
    EmptyOperatorError,
    GridError,
    NotContractiveError,
    ResourceLimitError,
)
from .invert import (
    certify_decay,
    damped_slice,
    inverse_norm_bound,
    neumann_invert_contraction,
    neumann_invert_symmetric,
    slice_support_probe,
    spectral_radius_gelfand,
)
from .oracle import Grid, GridFunction, apply_operator, assemble_matrix, frame_bounds_estimate, opnorm_estimate

__version__ = "0.1.0"

__all__ = [
    "TFOperator", "TFPoint", "Weight", "adjoint", "axpy", "coeff_norms", "compose", "norm_av", "power",
    "power_norm_bound", "scale", "support_radius", "truncate", "unit",
    "ConvergenceError", "DimensionMismatchError", "EmptyOperatorError", "GridError", "NotContractiveError",
    "ResourceLimitError",
    "certify_decay", "damped_slice", "inverse_norm_bound", "neumann_invert_contraction",
    "neumann_invert_symmetric", "slice_support_probe", "spectral_radius_gelfand",
    "Grid", "GridFunction", "apply_operator", "assemble_matrix", "frame_bounds_estimate", "opnorm_estimate",
]
