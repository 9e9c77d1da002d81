"""
Variational Fit Loop
====================

Stochastic gradient ascent on the lower bound with ADADELTA step sizes:
draw s, form θ, estimate gradients, chain to T′, update μ and T′,
re-exponentiate the diagonal. Every F iterations the window average of the
lower-bound estimates is appended to the trace and checked against the
stopping rule.
"""

import logging
import math
from typing import List, Optional

import numpy as np

from sparsevi.engine.estimators import (
    chain_to_tprime,
    draw_standard_normal,
    estimate_gradients,
    lower_bound_from_log_h,
    make_rng,
)
from sparsevi.engine.state import VariationalState
from sparsevi.engine.stopping import StoppingRule, is_divergent
from sparsevi.exceptions import DimensionMismatchError, SingularFactorError
from sparsevi.linalg.pattern import SparsityPattern
from sparsevi.models import Algorithm, FitConfig, FitResult, StopDecision, Termination
from sparsevi.targets.base import TargetModel

logger = logging.getLogger(__name__)


def default_pattern(model: TargetModel, algorithm: Algorithm) -> SparsityPattern:
    """Diagonal for mean-field, full lower triangle for unrestricted, the model's own for alg2."""
    if algorithm is Algorithm.ALG1_MEANFIELD:
        return SparsityPattern.diagonal(model.dim)
    if algorithm is Algorithm.ALG1_UNRESTRICTED:
        return SparsityPattern.dense(model.dim)
    return model.recommended_pattern()


class VariationalFitter:
    """
    Single-threaded driver of one fit.

    Example:
        >>> fitter = VariationalFitter(model, FitConfig(rng_seed=7))
        >>> result = fitter.run()
        >>> result.termination
        <Termination.STOPPED: 'stopped-by-criterion'>
    """

    def __init__(
        self,
        model: TargetModel,
        config: FitConfig,
        pattern: Optional[SparsityPattern] = None,
    ):
        self.model = model
        self.config = config
        pattern = pattern or default_pattern(model, config.algorithm)
        if pattern.dim != model.dim:
            raise DimensionMismatchError(
                f"Pattern dimension {pattern.dim} does not match model dimension {model.dim}"
            )
        self.state = VariationalState.initial(
            pattern,
            precision=config.algorithm.is_precision,
            rho=config.rho,
            epsilon=config.epsilon,
        )
        self.rng = make_rng(config.rng_seed)
        self.iteration = 0
        self.lbar_trace: List[float] = []
        self.nonfinite_total = 0
        self.nonfinite_streak = 0
        self._stopping = StoppingRule(config.patience)
        self._window_sum = 0.0
        self._window_count = 0

    def step(self) -> Optional[float]:
        """
        Run one iteration and return its lower-bound estimate, or None when the
        target was non-finite and the update was skipped.
        """
        state = self.state
        draws = self.config.draws
        g_mu = np.zeros(state.dim)
        g_factor = np.zeros(state.pattern.nnz)
        lower_bound = 0.0
        finite = True

        for _ in range(draws):
            s = draw_standard_normal(self.rng, state.dim)
            estimate = estimate_gradients(state, self.model, s, self.config.estimator)
            if not estimate.finite:
                finite = False
                break
            g_mu += estimate.g_mu
            g_factor += estimate.g_factor
            lower_bound += lower_bound_from_log_h(state, estimate.log_h, s)

        self.iteration += 1
        if not finite:
            self.nonfinite_total += 1
            self.nonfinite_streak += 1
            if self.nonfinite_streak == 1:
                logger.warning("Non-finite target evaluation at iteration %d", self.iteration)
            return None
        self.nonfinite_streak = 0

        if draws > 1:
            g_mu /= draws
            g_factor /= draws
            lower_bound /= draws

        g_tprime = chain_to_tprime(g_factor, state.factor)
        state.apply_update(state.adadelta_mu.step(g_mu), state.adadelta_factor.step(g_tprime))

        if math.isfinite(lower_bound):
            self._window_sum += lower_bound
            self._window_count += 1
        return lower_bound

    def close_window(self) -> StopDecision:
        """Append the current window's average to the trace and apply the stopping rule."""
        lbar = self._window_sum / self._window_count if self._window_count else math.nan
        self.lbar_trace.append(lbar)
        self._window_sum = 0.0
        self._window_count = 0
        logger.debug("Window %d: L̄ = %r", len(self.lbar_trace), lbar)
        return self._stopping.update(lbar)

    def run(self) -> FitResult:
        config = self.config
        logger.info(
            "Starting fit: algorithm=%s estimator=%s d=%d nnz=%d seed=%d",
            config.algorithm.value,
            config.estimator.value,
            self.state.dim,
            self.state.pattern.nnz,
            config.rng_seed,
        )
        termination = Termination.MAX_ITERATIONS
        try:
            while self.iteration < config.max_iterations:
                self.step()
                decision = None
                if self.iteration % config.window == 0:
                    decision = self.close_window()
                if self.nonfinite_streak > config.window:
                    logger.warning(
                        "More than %d consecutive non-finite evaluations", config.window
                    )
                    termination = Termination.DIVERGED
                    break
                if not self.state.is_finite():
                    logger.warning("Variational parameters became non-finite")
                    termination = Termination.DIVERGED
                    break
                if decision is StopDecision.STOP:
                    divergent = is_divergent(
                        self.lbar_trace, config.patience, config.divergence_factor
                    )
                    termination = Termination.DIVERGED if divergent else Termination.STOPPED
                    break
        except SingularFactorError as e:
            logger.warning("Factor became singular: %s", e.message)
            termination = Termination.DIVERGED

        logger.info(
            "Fit finished: termination=%s iterations=%d windows=%d",
            termination.value,
            self.iteration,
            len(self.lbar_trace),
        )
        return self.result(termination)

    def result(self, termination: Termination) -> FitResult:
        return FitResult(
            mu=self.state.mu.copy(),
            factor=self.state.factor.copy(),
            lbar_trace=list(self.lbar_trace),
            termination=termination,
            iterations_used=self.iteration,
            rng_seed=self.config.rng_seed,
            algorithm=self.config.algorithm,
            estimator=self.config.estimator,
            window=self.config.window,
            nonfinite_evaluations=self.nonfinite_total,
            touched=self.state.factor.touched,
        )


def run_fit(
    model: TargetModel,
    config: FitConfig,
    pattern: Optional[SparsityPattern] = None,
) -> FitResult:
    """Fit a Gaussian approximation to ``model`` from μ = 0, T = I."""
    return VariationalFitter(model, config, pattern).run()
