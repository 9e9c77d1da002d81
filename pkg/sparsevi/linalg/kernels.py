"""
Compressed-column kernels for lower-triangular factors.

The factor is stored column by column (``indptr``, ``indices``, ``data``) with
row indices sorted inside each column, so the diagonal is always the first
stored entry of its column. Every kernel touches each stored value exactly
once and returns how many values it touched.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def forward_solve(indptr, indices, data, rhs):
    """Solve T x = rhs by streaming columns left to right."""
    n = rhs.shape[0]
    x = rhs.copy()
    for j in range(n):
        start = indptr[j]
        x[j] /= data[start]
        xj = x[j]
        for p in range(start + 1, indptr[j + 1]):
            x[indices[p]] -= data[p] * xj
    return x, indptr[n]


@njit(cache=True)
def backward_solve_transposed(indptr, indices, data, rhs):
    """Solve T^T x = rhs; column j of T is row j of T^T."""
    n = rhs.shape[0]
    x = np.empty(n)
    for j in range(n - 1, -1, -1):
        start = indptr[j]
        acc = rhs[j]
        for p in range(start + 1, indptr[j + 1]):
            acc -= data[p] * x[indices[p]]
        x[j] = acc / data[start]
    return x, indptr[n]


@njit(cache=True)
def multiply(indptr, indices, data, vec):
    """y = T vec."""
    n = vec.shape[0]
    y = np.zeros(n)
    for j in range(n):
        vj = vec[j]
        for p in range(indptr[j], indptr[j + 1]):
            y[indices[p]] += data[p] * vj
    return y, indptr[n]


@njit(cache=True)
def multiply_transposed(indptr, indices, data, vec):
    """y = T^T vec."""
    n = vec.shape[0]
    y = np.zeros(n)
    for j in range(n):
        acc = 0.0
        for p in range(indptr[j], indptr[j + 1]):
            acc += data[p] * vec[indices[p]]
        y[j] = acc
    return y, indptr[n]


@njit(cache=True)
def inverse_column_norms(indptr, indices, data):
    """
    Squared norms of the columns of T^{-1}.

    Column i of T^{-1} solves T x = e_i; x is zero above row i, so the forward
    sweep starts at column i.
    """
    n = indptr.shape[0] - 1
    out = np.empty(n)
    x = np.zeros(n)
    touched = 0
    for i in range(n):
        for k in range(i, n):
            x[k] = 0.0
        x[i] = 1.0
        for j in range(i, n):
            start = indptr[j]
            x[j] /= data[start]
            xj = x[j]
            if xj != 0.0:
                for p in range(start + 1, indptr[j + 1]):
                    x[indices[p]] -= data[p] * xj
            touched += indptr[j + 1] - start
        acc = 0.0
        for k in range(i, n):
            acc += x[k] * x[k]
        out[i] = acc
    return out, touched
