"""
Synthetic datasets of any size, for benchmarks and tests.
"""

import logging
from typing import Optional

import numpy as np
from scipy.special import expit

from sparsevi.data.returns import ReturnSeries, mean_corrected_returns
from sparsevi.exceptions import ValidationError
from sparsevi.models import GlmmFamily
from sparsevi.targets.glmm import GlmmSpec

logger = logging.getLogger(__name__)


def simulate_glmm(
    n: int,
    p: int = 1,
    k_beta: int = 4,
    family: GlmmFamily = GlmmFamily.BERNOULLI_LOGIT,
    obs_per_subject: int = 7,
    seed: int = 0,
    beta: Optional[np.ndarray] = None,
    random_sd: float = 0.7,
) -> GlmmSpec:
    """
    Balanced mixed-model data: intercepts plus standard normal covariates
    in X and Z, random effects b_i ~ N(0, random_sd² I).

    Poisson coefficients default to a smaller scale so counts stay moderate.
    """
    if n < 1 or p < 1 or k_beta < 1 or obs_per_subject < 1:
        raise ValidationError("n, p, k_beta and obs_per_subject must be positive")
    family = GlmmFamily(family)
    rng = np.random.default_rng(seed)
    n_obs = n * obs_per_subject
    subject = np.repeat(np.arange(n), obs_per_subject)

    X = np.column_stack([np.ones(n_obs), rng.standard_normal((n_obs, k_beta - 1))])
    Z = np.column_stack([np.ones(n_obs), rng.standard_normal((n_obs, p - 1))])
    scale = 0.5 if family is GlmmFamily.BERNOULLI_LOGIT else 0.2
    if beta is None:
        beta = scale * rng.standard_normal(k_beta)
    B = random_sd * rng.standard_normal((n, p))
    eta = X @ beta + np.einsum("ij,ij->i", Z, B[subject])

    if family is GlmmFamily.BERNOULLI_LOGIT:
        y = (rng.uniform(size=n_obs) < expit(eta)).astype(float)
    else:
        y = rng.poisson(np.exp(eta)).astype(float)

    logger.debug("Simulated %s GLMM n=%d p=%d k_beta=%d", family.value, n, p, k_beta)
    return GlmmSpec(family=family, y=y, X=X, Z=Z, subject=subject, n_subjects=n)


def simulate_sv(
    n: int,
    alpha: float = np.log(0.3),
    lam: float = 0.0,
    phi: float = 0.95,
    seed: int = 0,
) -> ReturnSeries:
    """
    Simulate n returns from the stochastic volatility model and run them
    through the same rate -> mean-corrected-return transform as real data.
    """
    if n < 2:
        raise ValidationError(f"SV simulation needs n >= 2, got {n}")
    if not -1.0 < phi < 1.0:
        raise ValidationError(f"phi must lie in (-1, 1), got {phi}")
    rng = np.random.default_rng(seed)
    sigma = np.exp(alpha)
    b = np.empty(n)
    b[0] = rng.standard_normal() / np.sqrt(1.0 - phi ** 2)
    for t in range(1, n):
        b[t] = phi * b[t - 1] + rng.standard_normal()
    returns = np.exp(0.5 * (lam + sigma * b)) * rng.standard_normal(n)
    rates = np.exp(np.concatenate([[0.0], np.cumsum(returns / 100.0)]))
    logger.debug("Simulated SV series n=%d", n)
    return mean_corrected_returns(rates)
