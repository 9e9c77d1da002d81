"""
Sparse Linear Algebra
=====================

Sparsity patterns and sparse lower-triangular Cholesky factors, with
triangular solves and products whose cost is proportional to the number of
stored entries.
"""

import numpy as np

from sparsevi.linalg.factor import (
    CholeskyFactor,
    format_triplets,
    parse_triplets,
    read_triplets,
    write_triplets,
)
from sparsevi.linalg.pattern import SparsityPattern


def build_glmm_pattern(n: int, p: int, m: int) -> SparsityPattern:
    """Block-arrow pattern for n subjects, p random effects, m global parameters."""
    return SparsityPattern.glmm(n, p, m)


def build_ssm_pattern(n: int, k: int, m: int) -> SparsityPattern:
    """Band-arrow pattern for n states, dependence order k, m global parameters."""
    return SparsityPattern.ssm(n, k, m)


def solve_transposed(T: CholeskyFactor, s: np.ndarray) -> np.ndarray:
    return T.solve_transposed(s)


def solve_direct(T: CholeskyFactor, g: np.ndarray) -> np.ndarray:
    return T.solve_direct(g)


def multiply(T: CholeskyFactor, s: np.ndarray) -> np.ndarray:
    return T.multiply(s)


def marginal_variances(T: CholeskyFactor) -> np.ndarray:
    return T.marginal_variances()


__all__ = [
    "SparsityPattern",
    "CholeskyFactor",
    "build_glmm_pattern",
    "build_ssm_pattern",
    "solve_transposed",
    "solve_direct",
    "multiply",
    "marginal_variances",
    "format_triplets",
    "parse_triplets",
    "read_triplets",
    "write_triplets",
]
