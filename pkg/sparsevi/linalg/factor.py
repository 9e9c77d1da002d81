"""
Cholesky Factors
================

Sparse lower-triangular factor with positive diagonal, stored as one value per
pattern position. The same type holds T (Cholesky factor of a precision
matrix) and L (Cholesky factor of a covariance matrix).
"""

import logging
from pathlib import Path
from typing import Union

import numpy as np

from sparsevi.exceptions import DataError, DimensionMismatchError, SingularFactorError
from sparsevi.linalg import kernels
from sparsevi.linalg.pattern import SparsityPattern
from sparsevi.utils import format_float

logger = logging.getLogger(__name__)

MIN_DIAGONAL = 1e-30


class CholeskyFactor:
    """
    Lower-triangular factor with values only at pattern positions.

    Values are updated in place by a single writer during a fit; the pattern is
    fixed at construction, and the diagonal must be finite and positive
    (``validate=False`` skips the check for snapshots of diverged fits).
    ``touched`` counts stored values read by the compressed-column kernels
    since the last :meth:`reset_counter`.

    Example:
        >>> pattern = SparsityPattern.ssm(n=3, k=1, m=1)
        >>> T = CholeskyFactor.identity(pattern)
        >>> T.solve_transposed(np.ones(4))
        array([1., 1., 1., 1.])
    """

    def __init__(self, pattern: SparsityPattern, values: np.ndarray, validate: bool = True):
        values = np.array(values, dtype=float)
        if values.shape != (pattern.nnz,):
            raise DimensionMismatchError(
                f"Factor values length {values.shape} does not match pattern nnz {pattern.nnz}"
            )
        self.pattern = pattern
        self.values = values
        self.touched = 0
        if validate:
            self.check_diagonal()

    @classmethod
    def identity(cls, pattern: SparsityPattern) -> "CholeskyFactor":
        """Identity matrix on the given pattern."""
        values = np.zeros(pattern.nnz)
        values[pattern.diag_index] = 1.0
        return cls(pattern, values)

    @classmethod
    def from_dense(cls, pattern: SparsityPattern, matrix: np.ndarray) -> "CholeskyFactor":
        """Gather the entries of a dense matrix at the pattern positions."""
        matrix = np.asarray(matrix, dtype=float)
        if matrix.shape != (pattern.dim, pattern.dim):
            raise DimensionMismatchError(
                f"Dense matrix shape {matrix.shape} does not match pattern dimension {pattern.dim}"
            )
        return cls(pattern, matrix[pattern.rows, pattern.cols])

    @property
    def dim(self) -> int:
        return self.pattern.dim

    @property
    def diagonal(self) -> np.ndarray:
        """Diagonal entries (a copy)."""
        return self.values[self.pattern.diag_index]

    def log_det(self) -> float:
        """log|T| = sum of log diagonal entries."""
        return float(np.sum(np.log(self.diagonal)))

    def copy(self) -> "CholeskyFactor":
        return CholeskyFactor(self.pattern, self.values.copy(), validate=False)

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.dim, self.dim))
        out[self.pattern.rows, self.pattern.cols] = self.values
        return out

    def reset_counter(self) -> None:
        self.touched = 0

    # ------------------------------------------------------------------
    # Products and solves
    # ------------------------------------------------------------------

    def solve_transposed(self, s: np.ndarray) -> np.ndarray:
        """Solve T^T x = s by back substitution."""
        rhs = self._check_vector(s)
        self.check_diagonal()
        x, touched = kernels.backward_solve_transposed(
            self.pattern.indptr, self.pattern.indices, self.values, rhs
        )
        self.touched += int(touched)
        return x

    def solve_direct(self, g: np.ndarray) -> np.ndarray:
        """Solve T x = g by forward substitution."""
        rhs = self._check_vector(g)
        self.check_diagonal()
        x, touched = kernels.forward_solve(
            self.pattern.indptr, self.pattern.indices, self.values, rhs
        )
        self.touched += int(touched)
        return x

    def multiply(self, s: np.ndarray) -> np.ndarray:
        """y = T s."""
        vec = self._check_vector(s)
        y, touched = kernels.multiply(self.pattern.indptr, self.pattern.indices, self.values, vec)
        self.touched += int(touched)
        return y

    def multiply_transposed(self, v: np.ndarray) -> np.ndarray:
        """y = T^T v."""
        vec = self._check_vector(v)
        y, touched = kernels.multiply_transposed(
            self.pattern.indptr, self.pattern.indices, self.values, vec
        )
        self.touched += int(touched)
        return y

    def marginal_variances(self) -> np.ndarray:
        """
        diag(T^{-T} T^{-1}), i.e. the marginal variances when T is the Cholesky
        factor of a precision matrix. Computed with one forward solve per
        coordinate.
        """
        self.check_diagonal()
        out, touched = kernels.inverse_column_norms(
            self.pattern.indptr, self.pattern.indices, self.values
        )
        self.touched += int(touched)
        return out

    def _check_vector(self, vec: np.ndarray) -> np.ndarray:
        arr = np.ascontiguousarray(vec, dtype=float)
        if arr.shape != (self.dim,):
            raise DimensionMismatchError(
                f"Vector length {arr.shape} does not match factor dimension {self.dim}"
            )
        return arr

    def check_diagonal(self) -> None:
        """Raise SingularFactorError unless every diagonal entry is finite and at least 1e-30."""
        diag = self.diagonal
        bad = ~np.isfinite(diag) | ~(diag >= MIN_DIAGONAL)
        if np.any(bad):
            index = int(np.argmax(bad))
            raise SingularFactorError(
                f"Diagonal entry {index} is {diag[index]!r}",
                details={"Index": index, "Dimension": self.dim},
            )

    def __repr__(self) -> str:
        return f"CholeskyFactor(dim={self.dim}, nnz={self.pattern.nnz})"


# ============================================================================
# Triplet format
# ============================================================================

def format_triplets(factor: CholeskyFactor) -> str:
    """
    Plain-text triplet form: a ``d nnz`` header, then ``row col value`` per
    entry with 1-based indices in canonical column-major order.
    """
    pattern = factor.pattern
    lines = [f"{pattern.dim} {pattern.nnz}"]
    for row, col, value in zip(pattern.rows.tolist(), pattern.cols.tolist(), factor.values):
        lines.append(f"{row + 1} {col + 1} {format_float(value)}")
    return "\n".join(lines) + "\n"


def parse_triplets(text: str) -> CholeskyFactor:
    """Inverse of :func:`format_triplets`."""
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise DataError("Triplet text is empty")
    try:
        dim, nnz = (int(tok) for tok in lines[0].split())
    except ValueError:
        raise DataError(f"Triplet header must be 'd nnz', got {lines[0]!r}") from None
    body = lines[1:]
    if len(body) != nnz:
        raise DataError(f"Triplet header announces {nnz} entries but {len(body)} follow")
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz)
    for k, line in enumerate(body):
        parts = line.split()
        if len(parts) != 3:
            raise DataError(f"Triplet line {k + 2} must have 3 fields, got {line!r}")
        try:
            rows[k], cols[k], vals[k] = int(parts[0]) - 1, int(parts[1]) - 1, float(parts[2])
        except ValueError:
            raise DataError(f"Cannot parse triplet line {k + 2}: {line!r}") from None
    pattern = SparsityPattern(dim, rows, cols)
    order = np.lexsort((rows, cols))
    return CholeskyFactor(pattern, vals[order])


def write_triplets(factor: CholeskyFactor, path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(format_triplets(factor))


def read_triplets(path: Union[str, Path]) -> CholeskyFactor:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_triplets(handle.read())
