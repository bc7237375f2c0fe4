"""Quantum metric tensors of parametrized wavefunctions on 2D grids.

The standard metric ``Re (d_i psi, d_j psi) - beta_i beta_j`` changes under
gauge phases that depend on position; the covariant metric built with a
transported connection ``Gamma_i`` does not.  :mod:`gaugeqmt.landau` provides
the lowest-Landau-level family as a worked model and :mod:`gaugeqmt.oracle`
the exact moments it is checked against.
"""

from .errors import (
    ConfigError,
    ContractError,
    ExprError,
    ExprSyntaxError,
    GaugeError,
    NumericalError,
    QMTError,
    UnboundParameterError,
    UnknownIdentifierError,
)
from .expr import eval_on_grid, parse, to_text
from .family import DerivativeScheme, ParamPoint, StateFamily, make_expr_family, param_derivative
from .fields import UNITS, ComplexField, Grid2D, RealField, UnitSystem, apply_phase, expectation, inner_product
from .geometry import (
    Connection,
    GaugePhase,
    QMTResult,
    berry_connection,
    beta_shift_check,
    covariant_qmt,
    gauge_transform,
    line_element,
    qmt,
    transform_connection,
)
from .landau import (
    default_grid,
    landau_connection,
    landau_family,
    landau_phase,
    landau_state,
    lz_residual,
    reference_qmt_paper,
)
from .oracle import MomentSpec, gaussian_moment, oracle_covariant_qmt, oracle_qmt

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ContractError",
    "ExprError",
    "ExprSyntaxError",
    "GaugeError",
    "NumericalError",
    "QMTError",
    "UnboundParameterError",
    "UnknownIdentifierError",
    "eval_on_grid",
    "parse",
    "to_text",
    "DerivativeScheme",
    "ParamPoint",
    "StateFamily",
    "make_expr_family",
    "param_derivative",
    "UNITS",
    "ComplexField",
    "Grid2D",
    "RealField",
    "UnitSystem",
    "apply_phase",
    "expectation",
    "inner_product",
    "Connection",
    "GaugePhase",
    "QMTResult",
    "berry_connection",
    "beta_shift_check",
    "covariant_qmt",
    "gauge_transform",
    "line_element",
    "qmt",
    "transform_connection",
    "default_grid",
    "landau_connection",
    "landau_family",
    "landau_phase",
    "landau_state",
    "lz_residual",
    "reference_qmt_paper",
    "MomentSpec",
    "gaussian_moment",
    "oracle_covariant_qmt",
    "oracle_qmt",
]
