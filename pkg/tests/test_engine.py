"""
Tests for the sparsevi Engine
=============================
"""

import math

import numpy as np
import pytest

import sparsevi
from sparsevi.data import simulate_glmm
from sparsevi.engine import (
    AdadeltaAccumulator,
    StoppingRule,
    VariationalFitter,
    VariationalState,
    adadelta_step,
    chain_to_tprime,
    draw_standard_normal,
    estimate_gradients,
    estimate_lower_bound,
    is_divergent,
    lower_bound_estimate,
    make_rng,
    run_fit,
    stopping_check,
)
from sparsevi.exceptions import DimensionMismatchError, SingularFactorError
from sparsevi.linalg import CholeskyFactor, SparsityPattern
from sparsevi.models import (
    Algorithm,
    Estimator,
    FitConfig,
    GlmmFamily,
    StopDecision,
    Termination,
)
from sparsevi.targets import (
    GaussianTarget,
    GaussianTargetSpec,
    GlmmTarget,
    TargetModel,
    random_target,
)


@pytest.fixture
def gaussian():
    return random_target(SparsityPattern.ssm(5, 1, 3), seed=2)


def _state_at_optimum(target):
    return VariationalState(target.spec.mean, target.spec.factor.copy(), precision=True)


def _covariance_state_at_optimum(target):
    """Dense covariance factor L with L Lᵀ equal to the target covariance."""
    L = np.linalg.cholesky(np.linalg.inv(target.spec.precision()))
    factor = CholeskyFactor.from_dense(SparsityPattern.dense(target.dim), L)
    return VariationalState(target.spec.mean, factor, precision=False)


class _NanTarget(TargetModel):
    def __init__(self, dim):
        self._dim = dim

    @property
    def dim(self):
        return self._dim

    def log_h(self, theta):
        return math.nan

    def grad_log_h(self, theta):
        return np.full(self._dim, math.nan)

    def recommended_pattern(self):
        return SparsityPattern.diagonal(self._dim)

    def blocks(self):
        return {"theta": slice(0, self._dim)}


class _FailingTarget(GaussianTarget):
    """Gaussian target whose log density turns NaN after ``good`` evaluations."""

    def __init__(self, spec, good):
        super().__init__(spec)
        self.good = good
        self.calls = 0

    def log_h(self, theta):
        self.calls += 1
        if self.calls > self.good:
            return math.nan
        return super().log_h(theta)


class TestAdadelta:
    def test_first_step(self):
        acc = AdadeltaAccumulator.zeros(1)
        delta = adadelta_step(acc, np.array([1.0]))
        assert delta[0] == pytest.approx(np.sqrt(1e-6) / np.sqrt(0.05 + 1e-6), rel=1e-12)
        assert delta[0] == pytest.approx(4.4718e-3, rel=1e-3)
        assert acc.eg2[0] == pytest.approx(0.05)

    def test_zero_gradient_decays(self):
        acc = AdadeltaAccumulator(eg2=np.array([2.0]), edx2=np.array([4.0]))
        delta = acc.step(np.zeros(1))
        assert delta[0] == 0.0
        assert acc.eg2[0] == pytest.approx(0.95 * 2.0)
        assert acc.edx2[0] == pytest.approx(0.95 * 4.0)

    def test_constant_gradient(self):
        acc = AdadeltaAccumulator.zeros(2)
        g = np.array([0.7, -3.0])
        deltas = np.array([acc.step(g) for _ in range(1000)])
        assert np.all(np.sign(deltas) == np.sign(g))
        assert np.all(np.abs(deltas) < 1.0)
        assert np.all(np.abs(deltas[-1]) > np.abs(deltas[0]))

    def test_length_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            AdadeltaAccumulator.zeros(3).step(np.ones(2))


class TestStopping:
    def test_stops_after_three_below(self):
        assert stopping_check([1, 2, 3, 2.9, 2.8], 2.7) is StopDecision.STOP
        assert stopping_check([1, 2, 3, 2.9], 2.8) is StopDecision.CONTINUE

    def test_monotone_never_stops(self):
        rule = StoppingRule(3)
        assert all(rule.update(float(v)) is StopDecision.CONTINUE for v in range(100))

    def test_counter_resets(self):
        rule = StoppingRule(3)
        decisions = [rule.update(v) for v in [1, 2, 1.9, 2.1, 1.8, 1.7, 1.6]]
        assert decisions[:-1] == [StopDecision.CONTINUE] * 6
        assert decisions[-1] is StopDecision.STOP
        assert rule.best == 2.1

    def test_equal_to_best_resets(self):
        rule = StoppingRule(2)
        for value in [1.0, 0.5, 1.0, 0.5]:
            assert rule.update(value) is StopDecision.CONTINUE

    def test_nan_counts_as_below(self):
        rule = StoppingRule(1)
        rule.update(1.0)
        assert rule.update(math.nan) is StopDecision.STOP


class TestDivergence:
    def test_nonfinite_trace(self):
        assert is_divergent([1.0, 2.0, math.nan])

    def test_plateau_is_not_divergent(self):
        trace = [-100.0, -50.0, -20.0, -10.0, -9.0, -9.5, -9.6, -9.7]
        assert not is_divergent(trace, patience=3)

    def test_collapse_is_divergent(self):
        trace = [-10.0, -9.0, -8.5, -8.4, -8.3, -1e3, -1e5, -1e7]
        assert is_divergent(trace, patience=3, factor=10.0)

    def test_too_short(self):
        assert not is_divergent([1.0, 0.0, -1e9, -1e12], patience=3)

    def test_early_nan_window_does_not_mark_plateau(self):
        trace = [math.nan, -100.0, -50.0, -20.0, -10.0, -9.0, -9.5, -9.6, -9.7]
        assert not is_divergent(trace, patience=3)

    def test_early_nan_window_keeps_collapse(self):
        trace = [math.nan, -10.0, -9.0, -8.5, -8.4, -8.3, -1e3, -1e5, -1e7]
        assert is_divergent(trace, patience=3)


class TestRandomStream:
    def test_determinism(self):
        a, b = make_rng(5), make_rng(5)
        first = draw_standard_normal(a, 4)
        second = draw_standard_normal(a, 4)
        assert not np.array_equal(first, second)
        np.testing.assert_array_equal(first, draw_standard_normal(b, 4))

    def test_moments(self):
        draws = draw_standard_normal(make_rng(0), 1_000_000)
        assert abs(draws.mean()) < 4.0 / 1000.0
        assert abs(draws.var() - 1.0) < 0.01


class TestEstimators:
    def test_family2_vanishes_at_gaussian_optimum(self, gaussian):
        state = _state_at_optimum(gaussian)
        rng = make_rng(1)
        for _ in range(10):
            est = estimate_gradients(state, gaussian, draw_standard_normal(rng, state.dim),
                                     Estimator.FAMILY2)
            np.testing.assert_allclose(est.g_mu, 0.0, atol=1e-12)
            np.testing.assert_allclose(est.g_factor, 0.0, atol=1e-12)

    def test_family1_at_gaussian_optimum(self, gaussian):
        state = _state_at_optimum(gaussian)
        s = draw_standard_normal(make_rng(2), state.dim)
        est = estimate_gradients(state, gaussian, s, Estimator.FAMILY1)
        np.testing.assert_allclose(est.g_mu, -gaussian.spec.factor.multiply(s), atol=1e-12)
        assert np.linalg.norm(est.g_mu) > 0.0

    def test_covariance_family2_vanishes(self, gaussian):
        state = _covariance_state_at_optimum(gaussian)
        s = draw_standard_normal(make_rng(3), state.dim)
        est = estimate_gradients(state, gaussian, s, Estimator.FAMILY2)
        np.testing.assert_allclose(est.g_mu, 0.0, atol=1e-10)
        np.testing.assert_allclose(est.g_factor, 0.0, atol=1e-10)

    def test_families_agree_in_expectation(self):
        model = GlmmTarget(simulate_glmm(5, seed=3))
        state = VariationalState.initial(model.recommended_pattern())
        state.mu[:] = 0.1
        draws = 10_000
        means, variances = [], []
        for family, seed in ((Estimator.FAMILY1, 10), (Estimator.FAMILY2, 11)):
            rng = make_rng(seed)
            samples = np.array([
                estimate_gradients(state, model, draw_standard_normal(rng, state.dim), family).g_mu
                for _ in range(draws)
            ])
            means.append(samples.mean(axis=0))
            variances.append(samples.var(axis=0, ddof=1) / draws)
        se = np.sqrt(variances[0] + variances[1])
        assert np.all(np.abs(means[0] - means[1]) < 4.0 * se + 1e-12)

    @pytest.mark.slow
    @pytest.mark.parametrize("family", [Estimator.FAMILY1, Estimator.FAMILY2])
    def test_mean_gradient_matches_closed_form(self, family):
        """E[g_μ] = Ω*(μ* − μ) for a Gaussian target, whatever the factor."""
        target = random_target(SparsityPattern.ssm(17, 1, 3), seed=6)
        rng = np.random.default_rng(7)
        mu = target.spec.mean + 0.5 * rng.standard_normal(target.dim)
        pattern = target.spec.factor.pattern
        values = target.spec.factor.values + 0.05 * rng.standard_normal(pattern.nnz)
        values[pattern.diag_index] = target.spec.factor.diagonal
        state = VariationalState(mu, CholeskyFactor(pattern, values))
        expected = target.spec.precision() @ (target.spec.mean - mu)

        draws = 100_000
        stream = make_rng(8)
        samples = np.array([
            estimate_gradients(state, target, draw_standard_normal(stream, state.dim), family).g_mu
            for _ in range(draws)
        ])
        se = samples.std(axis=0, ddof=1) / np.sqrt(draws)
        assert np.all(np.abs(samples.mean(axis=0) - expected) < 3.0 * se + 1e-9)

    def test_nonfinite_flag(self):
        model = _NanTarget(3)
        state = VariationalState.initial(model.recommended_pattern())
        est = estimate_gradients(state, model, np.ones(3), Estimator.FAMILY2)
        assert not est.finite

    def test_wrong_variate_length(self, gaussian):
        with pytest.raises(DimensionMismatchError):
            estimate_gradients(_state_at_optimum(gaussian), gaussian, np.ones(3), Estimator.FAMILY1)


class TestChainRule:
    def test_identity_unchanged(self):
        T = CholeskyFactor.identity(SparsityPattern.ssm(3, 1, 1))
        g = np.arange(1.0, T.pattern.nnz + 1)
        np.testing.assert_array_equal(chain_to_tprime(g, T), g)

    def test_diagonal_scaled(self):
        T = CholeskyFactor.from_dense(SparsityPattern.diagonal(1), np.array([[3.0]]))
        np.testing.assert_array_equal(chain_to_tprime(np.array([2.0]), T), [6.0])

    @pytest.mark.parametrize("precision", [True, False])
    def test_matches_finite_differences(self, precision):
        """Family 1 is the exact gradient of L̂ at fixed s, so differences in T′ must agree."""
        target = random_target(SparsityPattern.ssm(4, 1, 2), seed=4)
        rng = np.random.default_rng(0)
        pattern = target.recommended_pattern() if precision else SparsityPattern.dense(target.dim)
        mu = target.spec.mean + 0.3 * rng.standard_normal(target.dim)
        tprime = 0.2 * rng.standard_normal(pattern.nnz)
        s = rng.standard_normal(target.dim)

        def lower_bound(tp):
            values = tp.copy()
            values[pattern.diag_index] = np.exp(tp[pattern.diag_index])
            state = VariationalState(mu, CholeskyFactor(pattern, values), precision=precision)
            return lower_bound_estimate(state, target, s)

        values = tprime.copy()
        values[pattern.diag_index] = np.exp(tprime[pattern.diag_index])
        state = VariationalState(mu, CholeskyFactor(pattern, values), precision=precision)
        est = estimate_gradients(state, target, s, Estimator.FAMILY1)
        analytic = chain_to_tprime(est.g_factor, state.factor)

        step = 1e-5
        numeric = np.empty_like(tprime)
        for k in range(tprime.size):
            up, down = tprime.copy(), tprime.copy()
            up[k] += step
            down[k] -= step
            numeric[k] = (lower_bound(up) - lower_bound(down)) / (2.0 * step)
        scale = np.maximum(1.0, np.abs(numeric))
        assert np.max(np.abs(analytic - numeric) / scale) < 1e-4


class TestLowerBound:
    def test_standard_normal_at_mode(self):
        pattern = SparsityPattern.ssm(3, 1, 1)
        target = GaussianTarget(GaussianTargetSpec(np.zeros(4), CholeskyFactor.identity(pattern)))
        state = VariationalState.initial(pattern)
        assert lower_bound_estimate(state, target, np.zeros(4)) == pytest.approx(0.0, abs=1e-12)

    def test_constant_at_optimum(self, gaussian):
        state = _state_at_optimum(gaussian)
        rng = make_rng(4)
        values = [lower_bound_estimate(state, gaussian, draw_standard_normal(rng, state.dim))
                  for _ in range(100)]
        assert np.ptp(values) < 1e-10
        assert abs(values[0]) < 1e-10

    def test_covariance_constant_at_optimum(self, gaussian):
        state = _covariance_state_at_optimum(gaussian)
        rng = make_rng(5)
        values = [lower_bound_estimate(state, gaussian, draw_standard_normal(rng, state.dim))
                  for _ in range(20)]
        assert np.ptp(values) < 1e-9

    def test_mismatch_is_below_optimum(self, gaussian):
        state = _state_at_optimum(gaussian)
        state.mu += 1.0
        estimate = estimate_lower_bound(state, gaussian, draws=2000, seed=1)
        assert estimate.mean + 4.0 * estimate.stderr < 0.0
        assert estimate.nonfinite == 0


class TestVariationalState:
    def test_initial(self):
        state = VariationalState.initial(SparsityPattern.glmm(3, 1, 2))
        np.testing.assert_array_equal(state.mu, 0.0)
        np.testing.assert_array_equal(state.tprime, 0.0)
        np.testing.assert_array_equal(state.factor.diagonal, 1.0)

    def test_update_keeps_diagonal_positive(self):
        state = VariationalState.initial(SparsityPattern.ssm(3, 1, 1))
        delta = np.full(state.pattern.nnz, -50.0)
        state.apply_update(np.zeros(state.dim), delta)
        assert np.all(state.factor.diagonal > 0.0)
        off = ~state.pattern.is_diagonal
        np.testing.assert_array_equal(state.factor.values[off], -50.0)

    def test_rejects_nonpositive_diagonal(self):
        factor = CholeskyFactor.identity(SparsityPattern.diagonal(2))
        factor.values[1] = -1.0
        with pytest.raises(SingularFactorError):
            VariationalState(np.zeros(2), factor)

    def test_copy_is_independent(self):
        state = VariationalState.initial(SparsityPattern.diagonal(2))
        clone = state.copy()
        clone.apply_update(np.ones(2), np.ones(2))
        np.testing.assert_array_equal(state.mu, 0.0)
        np.testing.assert_array_equal(state.adadelta_mu.eg2, clone.adadelta_mu.eg2)


class TestFit:
    def test_deterministic(self, gaussian):
        config = FitConfig(window=50, max_iterations=600, rng_seed=9)
        first = run_fit(gaussian, config)
        second = run_fit(gaussian, config)
        assert first.to_text() == second.to_text()
        assert first.iterations_used <= 600
        assert len(first.lbar_trace) == first.iterations_used // 50

    def test_different_seeds_differ(self, gaussian):
        a = run_fit(gaussian, FitConfig(window=50, max_iterations=100, rng_seed=1))
        b = run_fit(gaussian, FitConfig(window=50, max_iterations=100, rng_seed=2))
        assert not np.array_equal(a.mu, b.mu)

    @pytest.mark.parametrize("algorithm", ["alg1-mf", "alg1-full", "alg2"])
    @pytest.mark.parametrize("estimator", ["1", "2"])
    def test_every_variant_runs(self, gaussian, algorithm, estimator):
        config = FitConfig(algorithm=algorithm, estimator=estimator, window=25,
                           max_iterations=200, rng_seed=0)
        result = run_fit(gaussian, config)
        assert result.algorithm is Algorithm.parse(algorithm)
        assert np.all(np.isfinite(result.mu))
        assert result.termination in (Termination.STOPPED, Termination.MAX_ITERATIONS)
        expected_nnz = {"alg1-mf": gaussian.dim,
                        "alg1-full": gaussian.dim * (gaussian.dim + 1) // 2,
                        "alg2": gaussian.recommended_pattern().nnz}[algorithm]
        assert result.factor.pattern.nnz == expected_nnz

    def test_max_iterations(self, gaussian):
        result = run_fit(gaussian, FitConfig(window=10, patience=1000, max_iterations=55))
        assert result.termination is Termination.MAX_ITERATIONS
        assert result.iterations_used == 55
        assert len(result.lbar_trace) == 5

    def test_repeated_nonfinite_diverges(self):
        result = run_fit(_NanTarget(3), FitConfig(window=20, max_iterations=1000))
        assert result.termination is Termination.DIVERGED
        assert result.iterations_used == 21
        assert result.nonfinite_evaluations == 21
        assert len(result.lbar_trace) == 1 and math.isnan(result.lbar_trace[0])
        np.testing.assert_array_equal(result.mu, 0.0)

    def test_divergence_on_window_boundary_keeps_last_window(self, gaussian):
        target = _FailingTarget(gaussian.spec, good=9)
        result = run_fit(target, FitConfig(window=10, max_iterations=1000))
        assert result.termination is Termination.DIVERGED
        assert result.iterations_used == 20
        assert len(result.lbar_trace) == result.iterations_used // 10
        assert math.isfinite(result.lbar_trace[0])
        assert math.isnan(result.lbar_trace[1])

    def test_pattern_dimension_checked(self, gaussian):
        with pytest.raises(DimensionMismatchError):
            VariationalFitter(gaussian, FitConfig(), SparsityPattern.diagonal(3))

    def test_step_returns_lower_bound(self, gaussian):
        fitter = VariationalFitter(gaussian, FitConfig(window=10, max_iterations=10))
        value = fitter.step()
        assert value is not None and math.isfinite(value)
        assert fitter.iteration == 1

    def test_package_quick_start(self):
        target = sparsevi.random_target(sparsevi.SparsityPattern.ssm(17, 1, 3), seed=0)
        config = sparsevi.FitConfig(window=500, rng_seed=1, max_iterations=1000)
        result = sparsevi.run_fit(target, config)
        assert result.rng_seed == 1
        assert len(result.lbar_trace) == 2

    def test_draws_average(self, gaussian):
        result = run_fit(gaussian, FitConfig(window=20, max_iterations=100, draws=4))
        assert np.all(np.isfinite(result.mu))

    @pytest.mark.slow
    @pytest.mark.parametrize(
        "pattern",
        [
            SparsityPattern.ssm(17, 1, 3),
            SparsityPattern.ssm(197, 1, 3),
            SparsityPattern.glmm(3, 4, 8),
            SparsityPattern.glmm(48, 4, 8),
        ],
        ids=["band-20", "band-200", "arrow-20", "arrow-200"],
    )
    def test_recovers_gaussian_target(self, pattern):
        target = random_target(pattern, seed=0)
        result = run_fit(target, FitConfig(estimator="2", rng_seed=1))

        assert result.termination is Termination.STOPPED
        assert np.max(np.abs(result.mu - target.spec.mean)) < 0.05
        T = result.factor.to_dense()
        omega = target.spec.precision()
        assert np.linalg.norm(T @ T.T - omega) / np.linalg.norm(omega) < 0.05


class TestFamilyNesting:
    @pytest.mark.slow
    def test_sparse_precision_bound_not_below_mean_field(self):
        model = GlmmTarget(simulate_glmm(59, k_beta=6, family=GlmmFamily.POISSON_LOG,
                                         obs_per_subject=4, seed=0))
        estimates = {}
        for algorithm in ("alg2", "alg1-mf"):
            result = run_fit(model, FitConfig(algorithm=algorithm, estimator="2", rng_seed=1))
            state = VariationalState(result.mu, result.factor,
                                     precision=result.algorithm.is_precision)
            estimates[algorithm] = estimate_lower_bound(state, model, draws=10_000, seed=2)

        sparse, mean_field = estimates["alg2"], estimates["alg1-mf"]
        se = math.hypot(sparse.stderr, mean_field.stderr)
        assert sparse.mean >= mean_field.mean - 2.0 * se
