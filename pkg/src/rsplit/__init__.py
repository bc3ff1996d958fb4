"""Resolvents of operator sums by relaxed Douglas-Rachford / Peaceman-Rachford splitting."""

from .bestapprox import aamr_project, dykstra_project, project_intersection
from .engine import (
    IterationTrace,
    SolveResult,
    SplitConfig,
    aamr_params,
    avg_variant_params,
    balanced_config,
    dr_step,
    estimate_rate,
    maxmono_resolvent,
    solve_resolvent,
    validate_config,
)
from .errors import (
    ConfigError,
    DomainError,
    GammaIncompatibleError,
    InfeasibleError,
    ParameterError,
    SplittingError,
)
from .operators import (
    Operator,
    TransformedOperator,
    affine_quadratic,
    normal_cone_of,
    reflected_resolvent,
    resolvent,
    scaled_identity,
    subdifferential_of,
    transformed_resolvent,
    zero_operator,
)
from .prox import ProxFunction, indicator, neg_sq_norm, one_norm, prox, prox_of_sum, quadratic
from .sets import AffineSubspace, Ball, Box, ConvexSet, Halfspace, Hyperplane, project_set

__version__ = "0.1.0"
