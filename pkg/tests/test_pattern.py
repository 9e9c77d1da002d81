"""
Tests for Sparsity Patterns
===========================
"""

import numpy as np
import pytest

from sparsevi.exceptions import PatternError
from sparsevi.linalg import SparsityPattern, build_glmm_pattern, build_ssm_pattern


def _one_based(pattern):
    return {(r + 1, c + 1) for r, c in pattern.entries()}


def _random_precision(pattern, seed=0):
    rng = np.random.default_rng(seed)
    values = rng.standard_normal(pattern.nnz)
    values[pattern.diag_index] = rng.uniform(1.0, 2.0, pattern.dim)
    dense = np.zeros((pattern.dim, pattern.dim))
    dense[pattern.rows, pattern.cols] = values
    return dense @ dense.T


class TestGlmmPattern:
    def test_smallest_block_arrow(self):
        pattern = build_glmm_pattern(n=2, p=1, m=1)
        assert _one_based(pattern) == {(1, 1), (2, 2), (3, 1), (3, 2), (3, 3)}

    def test_epilepsy_size(self):
        assert SparsityPattern.glmm(n=59, p=1, m=7).nnz == 500

    def test_single_dense_block(self):
        assert _one_based(SparsityPattern.glmm(n=1, p=2, m=0)) == {(1, 1), (2, 1), (2, 2)}

    @pytest.mark.parametrize("n, p, m", [(5, 1, 3), (4, 2, 5), (3, 3, 0)])
    def test_count_formula(self, n, p, m):
        expected = n * p * (p + 1) // 2 + m * n * p + m * (m + 1) // 2
        assert SparsityPattern.glmm(n, p, m).nnz == expected

    def test_precision_has_zero_latent_cross_blocks(self):
        n, p, m = 4, 2, 3
        omega = _random_precision(SparsityPattern.glmm(n, p, m))
        for i in range(n):
            for j in range(n):
                if i != j:
                    block = omega[i * p:(i + 1) * p, j * p:(j + 1) * p]
                    assert np.all(block == 0.0)


class TestSsmPattern:
    def test_band_arrow(self):
        pattern = build_ssm_pattern(n=3, k=1, m=1)
        assert _one_based(pattern) == {
            (1, 1), (2, 1), (2, 2), (3, 2), (3, 3), (4, 1), (4, 2), (4, 3), (4, 4)
        }

    def test_gbpusd_size(self):
        assert SparsityPattern.ssm(n=945, k=1, m=3).nnz == 4730

    def test_no_globals_is_full_triangle(self):
        assert SparsityPattern.ssm(n=2, k=1, m=0) == SparsityPattern.dense(2)

    def test_precision_band(self):
        n, k, m = 8, 2, 2
        omega = _random_precision(SparsityPattern.ssm(n, k, m), seed=3)
        for i in range(n):
            for j in range(n):
                if abs(i - j) > k:
                    assert omega[i, j] == 0.0

    def test_band_wider_than_states(self):
        with pytest.raises(PatternError):
            SparsityPattern.ssm(n=2, k=2, m=1)


class TestSparsityPattern:
    def test_order_independent(self):
        a = SparsityPattern.from_entries(3, [(0, 0), (1, 1), (2, 2), (2, 0)])
        b = SparsityPattern.from_entries(3, [(2, 0), (2, 2), (0, 0), (1, 1)])
        assert a == b
        assert hash(a) == hash(b)

    def test_diagonal_first_in_each_column(self):
        pattern = SparsityPattern.glmm(3, 2, 2)
        assert np.array_equal(pattern.rows[pattern.diag_index], np.arange(pattern.dim))
        assert np.array_equal(pattern.diag_index, pattern.indptr[:-1])

    def test_missing_diagonal(self):
        with pytest.raises(PatternError):
            SparsityPattern.from_entries(2, [(0, 0), (1, 0)])

    def test_upper_triangle_rejected(self):
        with pytest.raises(PatternError):
            SparsityPattern.from_entries(2, [(0, 0), (1, 1), (0, 1)])

    def test_duplicates_rejected(self):
        with pytest.raises(PatternError):
            SparsityPattern.from_entries(2, [(0, 0), (1, 1), (1, 1)])

    def test_out_of_range(self):
        with pytest.raises(PatternError):
            SparsityPattern.from_entries(2, [(0, 0), (1, 1), (2, 0)])

    @pytest.mark.parametrize("builder, args", [
        (SparsityPattern.glmm, (0, 1, 1)),
        (SparsityPattern.glmm, (2, 0, 1)),
        (SparsityPattern.glmm, (2, 1, -1)),
        (SparsityPattern.ssm, (0, 1, 1)),
        (SparsityPattern.dense, (0,)),
    ])
    def test_bad_sizes(self, builder, args):
        with pytest.raises(PatternError):
            builder(*args)

    def test_dense_and_diagonal(self):
        assert SparsityPattern.dense(4).nnz == 10
        assert SparsityPattern.diagonal(4).nnz == 4
        assert SparsityPattern.diagonal(4).is_diagonal.all()

    def test_to_scipy(self):
        pattern = SparsityPattern.ssm(3, 1, 1)
        values = np.arange(1.0, pattern.nnz + 1)
        matrix = pattern.to_scipy(values).toarray()
        assert np.array_equal(matrix != 0, pattern.to_dense_mask())
