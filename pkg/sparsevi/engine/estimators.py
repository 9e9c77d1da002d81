"""
Reparameterization gradient estimators and lower-bound estimates.

For the precision parameterization θ = μ + T⁻ᵀs with x = T⁻ᵀs and g = ∇log h(θ):

    family 1:  g_μ = g,          g_T = −x (T⁻¹g)ᵀ − diag(1/T_ii)
    family 2:  g_μ = g + Ts,     g_T = −x (T⁻¹g_μ)ᵀ

For the covariance parameterization θ = μ + Ls:

    family 1:  g_μ = g,          g_L = g sᵀ + diag(1/L_ii)
    family 2:  g_μ = g + L⁻ᵀs,   g_L = g_μ sᵀ

Outer products are only ever formed at pattern positions.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from sparsevi.engine.state import VariationalState
from sparsevi.exceptions import DimensionMismatchError
from sparsevi.linalg.factor import CholeskyFactor
from sparsevi.models import Estimator
from sparsevi.targets.base import TargetModel

logger = logging.getLogger(__name__)

LOG_2PI = float(np.log(2.0 * np.pi))


def make_rng(seed: int) -> np.random.Generator:
    """One seeded PCG64 stream per fit; normals come from ``standard_normal``."""
    return np.random.Generator(np.random.PCG64(seed))


def draw_standard_normal(rng: np.random.Generator, d: int) -> np.ndarray:
    """d independent N(0, 1) variates."""
    return rng.standard_normal(d)


@dataclass
class GradientEstimate:
    """
    One stochastic gradient of the lower bound.

    Attributes:
        g_mu: Gradient with respect to μ
        g_factor: Gradient with respect to the factor values, aligned with its pattern
        theta: The point θ the target was evaluated at
        log_h: log h(θ)
        finite: False when the target returned a non-finite value
    """
    g_mu: np.ndarray
    g_factor: np.ndarray
    theta: np.ndarray
    log_h: float
    finite: bool


def estimate_gradients(
    state: VariationalState,
    model: TargetModel,
    s: np.ndarray,
    family: Estimator,
) -> GradientEstimate:
    """Evaluate one family-1 or family-2 gradient estimate at variate ``s``."""
    s = np.asarray(s, dtype=float)
    if s.shape != (state.dim,):
        raise DimensionMismatchError(
            f"Variate length {s.shape} does not match state dimension {state.dim}"
        )
    family = Estimator.parse(family)
    factor = state.factor
    pattern = factor.pattern
    rows, cols = pattern.rows, pattern.cols

    if state.precision:
        x = factor.solve_transposed(s)
        theta = state.mu + x
    else:
        theta = state.mu + factor.multiply(s)

    evaluation = model.evaluate(theta)
    g = evaluation.grad

    with np.errstate(over="ignore", invalid="ignore"):
        if state.precision:
            if family is Estimator.FAMILY1:
                g_mu = g
                c = factor.solve_direct(g)
                g_factor = -x[rows] * c[cols]
                g_factor[pattern.diag_index] -= 1.0 / factor.diagonal
            else:
                g_mu = g + factor.multiply(s)
                c = factor.solve_direct(g_mu)
                g_factor = -x[rows] * c[cols]
        else:
            if family is Estimator.FAMILY1:
                g_mu = g
                g_factor = g[rows] * s[cols]
                g_factor[pattern.diag_index] += 1.0 / factor.diagonal
            else:
                g_mu = g + factor.solve_transposed(s)
                g_factor = g_mu[rows] * s[cols]

    finite = evaluation.finite and bool(np.all(np.isfinite(g_mu)) and np.all(np.isfinite(g_factor)))
    return GradientEstimate(g_mu, g_factor, theta, evaluation.log_h, finite)


def chain_to_tprime(g_factor: np.ndarray, factor: CholeskyFactor) -> np.ndarray:
    """Gradient with respect to T′: diagonal entries times T_ii, the rest unchanged."""
    g = np.array(g_factor, dtype=float)
    if g.shape != (factor.pattern.nnz,):
        raise DimensionMismatchError(
            f"Gradient length {g.shape} does not match pattern nnz {factor.pattern.nnz}"
        )
    diag_index = factor.pattern.diag_index
    g[diag_index] *= factor.values[diag_index]
    return g


def lower_bound_from_log_h(state: VariationalState, log_h: float, s: np.ndarray) -> float:
    """
    L̂ for a θ already drawn from ``s``:

        log h(θ) + (d/2) log 2π ∓ log|T| + ½ sᵀs

    with −log|T| for the precision factor and +log|L| for the covariance factor.
    """
    log_det = state.factor.log_det()
    entropy = -log_det if state.precision else log_det
    return float(log_h + 0.5 * state.dim * LOG_2PI + entropy + 0.5 * float(s @ s))


def lower_bound_estimate(state: VariationalState, model: TargetModel, s: np.ndarray) -> float:
    """Unbiased single-draw estimate of the lower bound at variate ``s``."""
    theta = state.draw_theta(np.asarray(s, dtype=float))
    evaluation = model.evaluate(theta)
    return lower_bound_from_log_h(state, evaluation.log_h, s)


@dataclass
class LowerBoundEstimate:
    """Monte-Carlo lower bound with its standard error."""
    mean: float
    stderr: float
    draws: int
    nonfinite: int = 0


def estimate_lower_bound(
    state: VariationalState,
    model: TargetModel,
    draws: int = 10_000,
    seed: int = 0,
    rng: Optional[np.random.Generator] = None,
) -> LowerBoundEstimate:
    """
    Average ``draws`` single-draw estimates at a fixed state.

    Non-finite draws are dropped and counted.
    """
    rng = rng or make_rng(seed)
    values = np.empty(draws)
    for k in range(draws):
        values[k] = lower_bound_estimate(state, model, draw_standard_normal(rng, state.dim))
    finite = values[np.isfinite(values)]
    nonfinite = draws - finite.size
    if nonfinite:
        logger.warning("Dropped %d non-finite lower-bound draws of %d", nonfinite, draws)
    if finite.size == 0:
        return LowerBoundEstimate(float("nan"), float("nan"), draws, nonfinite)
    stderr = float(finite.std(ddof=1) / np.sqrt(finite.size)) if finite.size > 1 else float("nan")
    return LowerBoundEstimate(float(finite.mean()), stderr, draws, nonfinite)
