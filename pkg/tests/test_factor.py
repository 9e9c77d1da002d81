"""
Tests for Cholesky Factors
==========================
"""

import numpy as np
import pytest

from sparsevi.exceptions import DataError, DimensionMismatchError, SingularFactorError
from sparsevi.linalg import (
    CholeskyFactor,
    SparsityPattern,
    format_triplets,
    marginal_variances,
    multiply,
    parse_triplets,
    read_triplets,
    solve_direct,
    solve_transposed,
    write_triplets,
)


@pytest.fixture
def two_by_two():
    """T = [[2, 0], [1, 1]]."""
    return CholeskyFactor.from_dense(SparsityPattern.dense(2), np.array([[2.0, 0.0], [1.0, 1.0]]))


def _random_factor(pattern, seed=0):
    rng = np.random.default_rng(seed)
    values = 0.3 * rng.standard_normal(pattern.nnz)
    values[pattern.diag_index] = rng.uniform(0.5, 1.5, pattern.dim)
    return CholeskyFactor(pattern, values)


class TestSolves:
    def test_identity(self):
        T = CholeskyFactor.identity(SparsityPattern.ssm(4, 1, 2))
        s = np.arange(6.0)
        np.testing.assert_array_equal(solve_transposed(T, s), s)
        np.testing.assert_array_equal(solve_direct(T, s), s)
        np.testing.assert_array_equal(multiply(T, s), s)

    def test_two_by_two_transposed(self, two_by_two):
        np.testing.assert_allclose(two_by_two.solve_transposed(np.array([1.0, 2.0])), [-0.5, 2.0])

    def test_two_by_two_direct(self, two_by_two):
        np.testing.assert_allclose(two_by_two.solve_direct(np.array([2.0, 3.0])), [1.0, 2.0])

    def test_two_by_two_multiply(self, two_by_two):
        np.testing.assert_allclose(two_by_two.multiply(np.array([1.0, 1.0])), [2.0, 2.0])
        np.testing.assert_allclose(two_by_two.multiply_transposed(np.array([1.0, 1.0])), [3.0, 1.0])

    def test_random_residuals(self):
        T = _random_factor(SparsityPattern.ssm(47, 1, 3), seed=1)
        dense = T.to_dense()
        s = np.random.default_rng(2).standard_normal(T.dim)

        x = T.solve_transposed(s)
        assert np.max(np.abs(dense.T @ x - s)) < 1e-12 * max(1.0, np.max(np.abs(s)))
        y = T.solve_direct(s)
        assert np.max(np.abs(dense @ y - s)) < 1e-12 * max(1.0, np.max(np.abs(s)))
        np.testing.assert_allclose(T.multiply(s), dense @ s, rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(T.multiply_transposed(s), dense.T @ s, rtol=1e-12, atol=1e-12)

    def test_glmm_pattern_residuals(self):
        T = _random_factor(SparsityPattern.glmm(6, 2, 4), seed=5)
        s = np.random.default_rng(6).standard_normal(T.dim)
        np.testing.assert_allclose(T.to_dense().T @ T.solve_transposed(s), s, atol=1e-12)

    def test_zero_diagonal(self, two_by_two):
        two_by_two.values[two_by_two.pattern.diag_index[1]] = 0.0
        with pytest.raises(SingularFactorError):
            two_by_two.solve_transposed(np.ones(2))
        with pytest.raises(SingularFactorError):
            two_by_two.solve_direct(np.ones(2))

    def test_nonfinite_diagonal(self, two_by_two):
        two_by_two.values[0] = np.nan
        with pytest.raises(SingularFactorError):
            two_by_two.solve_transposed(np.ones(2))

    def test_wrong_length(self, two_by_two):
        with pytest.raises(DimensionMismatchError):
            two_by_two.solve_direct(np.ones(3))


class TestMarginalVariances:
    def test_identity(self):
        T = CholeskyFactor.identity(SparsityPattern.glmm(3, 1, 2))
        np.testing.assert_array_equal(T.marginal_variances(), np.ones(5))

    def test_diagonal(self):
        T = CholeskyFactor.from_dense(SparsityPattern.diagonal(2), np.diag([2.0, 4.0]))
        np.testing.assert_allclose(marginal_variances(T), [0.25, 0.0625])

    def test_matches_dense_inverse(self):
        T = _random_factor(SparsityPattern.ssm(17, 1, 3), seed=4)
        dense = T.to_dense()
        expected = np.diag(np.linalg.inv(dense @ dense.T))
        np.testing.assert_allclose(T.marginal_variances(), expected, rtol=1e-10)


class TestTouchedCounter:
    def test_counts_stored_values(self):
        pattern = SparsityPattern.ssm(10, 1, 3)
        T = CholeskyFactor.identity(pattern)
        s = np.ones(pattern.dim)
        T.solve_transposed(s)
        assert T.touched == pattern.nnz
        T.solve_direct(s)
        T.multiply(s)
        assert T.touched == 3 * pattern.nnz
        T.reset_counter()
        assert T.touched == 0

    def test_linear_in_states(self):
        counts = []
        for n in (100, 200, 400):
            T = CholeskyFactor.identity(SparsityPattern.ssm(n, 1, 3))
            T.solve_transposed(np.ones(T.dim))
            counts.append(T.touched)
        assert counts[2] - counts[1] == 2 * (counts[1] - counts[0])


class TestTriplets:
    def test_format(self, two_by_two):
        assert format_triplets(two_by_two) == "2 3\n1 1 2.0\n2 1 1.0\n2 2 1.0\n"

    def test_parse_any_order(self):
        factor = parse_triplets("2 3\n2 2 1.0\n1 1 2.0\n2 1 1.0\n")
        np.testing.assert_array_equal(factor.to_dense(), [[2.0, 0.0], [1.0, 1.0]])

    def test_file_round_trip(self, tmp_path):
        T = _random_factor(SparsityPattern.glmm(3, 2, 2), seed=9)
        path = tmp_path / "T.txt"
        write_triplets(T, path)
        parsed = read_triplets(path)
        assert parsed.pattern == T.pattern
        np.testing.assert_array_equal(parsed.values, T.values)

    @pytest.mark.parametrize("text", ["", "2\n", "2 3\n1 1 2.0\n", "1 1\n1 1 x\n"])
    def test_malformed(self, text):
        with pytest.raises(DataError):
            parse_triplets(text)


class TestConstruction:
    def test_values_length(self):
        with pytest.raises(DimensionMismatchError):
            CholeskyFactor(SparsityPattern.dense(2), np.ones(2))

    def test_log_det(self, two_by_two):
        assert two_by_two.log_det() == pytest.approx(np.log(2.0))

    def test_copy_is_independent(self, two_by_two):
        clone = two_by_two.copy()
        clone.values[0] = 5.0
        assert two_by_two.values[0] == 2.0

    @pytest.mark.parametrize("diagonal", [[-2.0, 1.0], [1.0, 0.0], [1.0, np.inf], [np.nan, 1.0]])
    def test_rejects_bad_diagonal(self, diagonal):
        with pytest.raises(SingularFactorError):
            CholeskyFactor(SparsityPattern.diagonal(2), np.array(diagonal))

    def test_negative_diagonal_blocks_solves(self, two_by_two):
        two_by_two.values[0] = -2.0
        with pytest.raises(SingularFactorError):
            two_by_two.solve_transposed(np.ones(2))
        with pytest.raises(SingularFactorError):
            two_by_two.marginal_variances()

    def test_parse_rejects_negative_diagonal(self):
        with pytest.raises(SingularFactorError):
            parse_triplets("2 2\n1 1 -2.0\n2 2 1.0\n")

    def test_copy_keeps_nonfinite_snapshot(self, two_by_two):
        two_by_two.values[0] = np.nan
        assert np.isnan(two_by_two.copy().values[0])
