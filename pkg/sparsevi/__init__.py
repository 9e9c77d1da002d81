"""
sparsevi
========

Gaussian variational approximations for Bayesian models with many latent
variables, parameterized by a sparse Cholesky factor of the precision matrix.

This library provides:
- Block-arrow and band-arrow sparsity patterns with sparse triangular solves
- Stochastic gradient ascent with ADADELTA step sizes and two gradient estimators
- Generalized linear mixed models and a stochastic volatility model as targets
- Finite-difference gradient checks and a command line for reproducible runs

Quick Start:
    >>> from sparsevi import FitConfig, random_target, run_fit, SparsityPattern
    >>>
    >>> # A Gaussian target whose precision shares the pattern of the factor
    >>> target = random_target(SparsityPattern.ssm(17, 1, 3), seed=0)
    >>>
    >>> result = run_fit(target, FitConfig(window=500, rng_seed=1))
    >>> print(result.termination.value, result.lbar_trace[-1])
"""

__version__ = "0.1.0"

from sparsevi.engine import (
    VariationalFitter,
    VariationalState,
    estimate_lower_bound,
    run_fit,
)
from sparsevi.exceptions import (
    DataError,
    DimensionMismatchError,
    GradientCheckError,
    ParseError,
    PatternError,
    ReplayError,
    SchemaError,
    SingularFactorError,
    SparseVIError,
    UsageError,
    ValidationError,
)
from sparsevi.linalg import CholeskyFactor, SparsityPattern
from sparsevi.models import (
    Algorithm,
    Estimator,
    FitConfig,
    FitResult,
    GlmmFamily,
    RunManifest,
    Termination,
)
from sparsevi.targets import (
    GaussianTarget,
    GlmmSpec,
    GlmmTarget,
    SvSpec,
    SvTarget,
    TargetModel,
    check_gradient,
    random_target,
)

__all__ = [
    "__version__",
    # Engine
    "VariationalFitter",
    "VariationalState",
    "estimate_lower_bound",
    "run_fit",
    # Linear algebra
    "CholeskyFactor",
    "SparsityPattern",
    # Models
    "Algorithm",
    "Estimator",
    "FitConfig",
    "FitResult",
    "GlmmFamily",
    "RunManifest",
    "Termination",
    # Targets
    "TargetModel",
    "GaussianTarget",
    "GlmmSpec",
    "GlmmTarget",
    "SvSpec",
    "SvTarget",
    "check_gradient",
    "random_target",
    # Exceptions
    "SparseVIError",
    "ValidationError",
    "PatternError",
    "DimensionMismatchError",
    "UsageError",
    "SingularFactorError",
    "DataError",
    "SchemaError",
    "ParseError",
    "GradientCheckError",
    "ReplayError",
]
