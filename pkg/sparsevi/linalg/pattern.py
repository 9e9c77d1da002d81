"""
Sparsity Patterns
=================

Positions of the structurally nonzero entries of a lower-triangular factor,
in column-major compressed layout, plus builders for the standard layouts:
dense, diagonal, block-arrow (mixed models) and band-arrow (state space
models).

Parameters are always ordered latent blocks first (b_1, ..., b_n) and global
parameters last; the builders assume that ordering.
"""

import logging
from typing import Iterable, List, Tuple

import numpy as np
from scipy import sparse

from sparsevi.exceptions import PatternError

logger = logging.getLogger(__name__)


class SparsityPattern:
    """
    Lower-triangular sparsity pattern in compressed-column form.

    Entries are unique, satisfy ``col <= row`` and always include the full
    diagonal. They are kept sorted by (col, row), so two patterns built from
    the same positions compare equal regardless of input order.

    Attributes:
        dim: Matrix dimension d
        indptr: Column pointers, length d + 1
        indices: Row index of each stored entry
        rows: Same as ``indices`` (0-based)
        cols: Column index of each stored entry (0-based)
        diag_index: Storage position of the diagonal entry of each column
    """

    def __init__(self, dim: int, rows: Iterable[int], cols: Iterable[int]):
        if int(dim) < 1:
            raise PatternError(f"Pattern dimension must be positive, got {dim}")
        dim = int(dim)
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        if rows.shape != cols.shape or rows.ndim != 1:
            raise PatternError("Pattern row and column arrays must be 1-D and the same length")
        if rows.size and (rows.min() < 0 or rows.max() >= dim or cols.min() < 0):
            raise PatternError(f"Pattern entries must lie inside a {dim}x{dim} matrix")
        if np.any(cols > rows):
            raise PatternError("Pattern entries must satisfy col <= row (lower triangle)")

        order = np.lexsort((rows, cols))
        rows, cols = rows[order], cols[order]
        if rows.size > 1:
            duplicate = (rows[1:] == rows[:-1]) & (cols[1:] == cols[:-1])
            if np.any(duplicate):
                raise PatternError("Pattern entries must be unique")

        indptr = np.zeros(dim + 1, dtype=np.int64)
        np.add.at(indptr, cols + 1, 1)
        indptr = np.cumsum(indptr)

        diag_index = indptr[:-1]
        if np.any(indptr[1:] == indptr[:-1]) or np.any(rows[diag_index] != np.arange(dim)):
            raise PatternError("Pattern must contain every diagonal position")

        self.dim = dim
        self.indptr = indptr
        self.indices = rows
        self.rows = rows
        self.cols = cols
        self.diag_index = np.ascontiguousarray(diag_index)
        self.rows.setflags(write=False)
        self.cols.setflags(write=False)
        self.indptr.setflags(write=False)
        self.diag_index.setflags(write=False)
        self._is_diag = np.zeros(rows.size, dtype=bool)
        self._is_diag[self.diag_index] = True
        self._is_diag.setflags(write=False)

    # ------------------------------------------------------------------
    # Builders
    # ------------------------------------------------------------------

    @classmethod
    def from_entries(cls, dim: int, entries: Iterable[Tuple[int, int]]) -> "SparsityPattern":
        """Build from 0-based (row, col) pairs."""
        pairs = list(entries)
        rows = [r for r, _ in pairs]
        cols = [c for _, c in pairs]
        return cls(dim, rows, cols)

    @classmethod
    def dense(cls, dim: int) -> "SparsityPattern":
        """Full lower triangle; the unrestricted covariance factor uses this."""
        _require_positive(dim=dim)
        rows, cols = np.tril_indices(dim)
        return cls(dim, rows, cols)

    @classmethod
    def diagonal(cls, dim: int) -> "SparsityPattern":
        """Diagonal only; the mean-field factor uses this."""
        _require_positive(dim=dim)
        idx = np.arange(dim)
        return cls(dim, idx, idx)

    @classmethod
    def glmm(cls, n: int, p: int, m: int) -> "SparsityPattern":
        """
        Block-arrow pattern for n subjects with p random effects each and m
        global parameters.

        Dense lower-triangular p x p blocks on the diagonal for each subject,
        dense m x p blocks in the bottom rows under every subject block and a
        dense lower-triangular m x m corner. Subject blocks do not touch each
        other, so T T^T has zero off-diagonal latent blocks.

        Example:
            >>> SparsityPattern.glmm(n=59, p=1, m=7).nnz
            500
        """
        _require_positive(n=n, p=p)
        _require_nonnegative(m=m)
        dim = n * p + m
        block_rows, block_cols = np.tril_indices(p)
        offsets = np.repeat(np.arange(n) * p, block_rows.size)
        rows = [np.tile(block_rows, n) + offsets]
        cols = [np.tile(block_cols, n) + offsets]
        rows.extend(_global_rows(n * p, m))
        cols.extend(_global_cols(n * p, m))
        pattern = cls(dim, np.concatenate(rows), np.concatenate(cols))
        logger.debug("Built block-arrow pattern d=%d nnz=%d", dim, pattern.nnz)
        return pattern

    @classmethod
    def ssm(cls, n: int, k: int, m: int) -> "SparsityPattern":
        """
        Band-arrow pattern for n states with dependence order k and m global
        parameters.

        Entry (i, j) of the first n rows is kept when i - k <= j <= i; the last m
        rows are dense with a dense lower-triangular corner.

        Example:
            >>> SparsityPattern.ssm(n=945, k=1, m=3).nnz
            4730
        """
        _require_positive(n=n, k=k)
        _require_nonnegative(m=m)
        if k >= n:
            raise PatternError(f"Band width k must be smaller than n (k={k}, n={n})")
        rows = []
        cols = []
        for offset in range(k + 1):
            idx = np.arange(offset, n)
            rows.append(idx)
            cols.append(idx - offset)
        rows.extend(_global_rows(n, m))
        cols.extend(_global_cols(n, m))
        pattern = cls(n + m, np.concatenate(rows), np.concatenate(cols))
        logger.debug("Built band-arrow pattern d=%d nnz=%d", n + m, pattern.nnz)
        return pattern

    # ------------------------------------------------------------------
    # Queries
    # ------------------------------------------------------------------

    @property
    def nnz(self) -> int:
        """Number of stored entries."""
        return int(self.rows.size)

    @property
    def is_diagonal(self) -> np.ndarray:
        """Boolean mask over stored entries marking diagonal positions."""
        return self._is_diag

    def entries(self) -> List[Tuple[int, int]]:
        """0-based (row, col) pairs in canonical column-major order."""
        return list(zip(self.rows.tolist(), self.cols.tolist()))

    def to_scipy(self, values: np.ndarray) -> sparse.csc_matrix:
        """CSC matrix carrying ``values`` at the pattern positions."""
        return sparse.csc_matrix(
            (np.asarray(values, dtype=float), self.indices, self.indptr),
            shape=(self.dim, self.dim),
        )

    def to_dense_mask(self) -> np.ndarray:
        """Boolean d x d mask of pattern positions."""
        mask = np.zeros((self.dim, self.dim), dtype=bool)
        mask[self.rows, self.cols] = True
        return mask

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SparsityPattern):
            return NotImplemented
        return (
            self.dim == other.dim
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.cols, other.cols)
        )

    def __hash__(self) -> int:
        return hash((self.dim, self.rows.tobytes(), self.cols.tobytes()))

    def __repr__(self) -> str:
        return f"SparsityPattern(dim={self.dim}, nnz={self.nnz})"


def _global_rows(n_latent: int, m: int) -> List[np.ndarray]:
    """Row indices of the dense bottom strip and the lower-triangular corner."""
    if m == 0:
        return []
    strip = np.repeat(np.arange(n_latent, n_latent + m), n_latent)
    corner_rows, _ = np.tril_indices(m)
    return [strip, corner_rows + n_latent]


def _global_cols(n_latent: int, m: int) -> List[np.ndarray]:
    if m == 0:
        return []
    strip = np.tile(np.arange(n_latent), m)
    _, corner_cols = np.tril_indices(m)
    return [strip, corner_cols + n_latent]


def _require_positive(**sizes: int) -> None:
    for name, value in sizes.items():
        if int(value) != value or value < 1:
            raise PatternError(f"Pattern size {name} must be a positive integer, got {value}")


def _require_nonnegative(**sizes: int) -> None:
    for name, value in sizes.items():
        if int(value) != value or value < 0:
            raise PatternError(f"Pattern size {name} must be a non-negative integer, got {value}")
