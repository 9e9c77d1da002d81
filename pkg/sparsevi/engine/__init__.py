"""
sparsevi Engine
===============

Stochastic gradient ascent on the evidence lower bound for Gaussian
approximations parameterized by a covariance or a sparse precision Cholesky
factor.
"""

from sparsevi.engine.adadelta import AdadeltaAccumulator, adadelta_step
from sparsevi.engine.estimators import (
    GradientEstimate,
    LowerBoundEstimate,
    chain_to_tprime,
    draw_standard_normal,
    estimate_gradients,
    estimate_lower_bound,
    lower_bound_estimate,
    make_rng,
)
from sparsevi.engine.fit import VariationalFitter, default_pattern, run_fit
from sparsevi.engine.state import VariationalState
from sparsevi.engine.stopping import StoppingRule, is_divergent, stopping_check

__all__ = [
    "AdadeltaAccumulator",
    "adadelta_step",
    "GradientEstimate",
    "LowerBoundEstimate",
    "chain_to_tprime",
    "draw_standard_normal",
    "estimate_gradients",
    "estimate_lower_bound",
    "lower_bound_estimate",
    "make_rng",
    "VariationalFitter",
    "VariationalState",
    "default_pattern",
    "run_fit",
    "StoppingRule",
    "is_divergent",
    "stopping_check",
]
