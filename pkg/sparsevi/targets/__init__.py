"""
sparsevi Target Models
======================

Unnormalized log posteriors h(θ) = p(θ) p(y | θ) with analytic gradients.
"""

from sparsevi.targets.base import TargetEvaluation, TargetModel
from sparsevi.targets.gaussian import (
    GaussianTarget,
    GaussianTargetSpec,
    gaussian_grad,
    gaussian_log_h,
    random_target,
)
from sparsevi.targets.glmm import (
    GlmmSpec,
    GlmmTarget,
    decode_zeta,
    encode_zeta,
    glmm_grad,
    glmm_log_h,
)
from sparsevi.targets.gradcheck import (
    GradientCheckReport,
    check_gradient,
    finite_difference_gradient,
)
from sparsevi.targets.sv import SvSpec, SvTarget, sv_grad, sv_log_h

__all__ = [
    "TargetModel",
    "TargetEvaluation",
    "GlmmSpec",
    "GlmmTarget",
    "glmm_log_h",
    "glmm_grad",
    "decode_zeta",
    "encode_zeta",
    "SvSpec",
    "SvTarget",
    "sv_log_h",
    "sv_grad",
    "GaussianTargetSpec",
    "GaussianTarget",
    "gaussian_log_h",
    "gaussian_grad",
    "random_target",
    "GradientCheckReport",
    "check_gradient",
    "finite_difference_gradient",
]
