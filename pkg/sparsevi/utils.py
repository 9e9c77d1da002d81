"""
Helper utilities for half-vectorization, deterministic number formatting and
artifact checksums.
"""

import hashlib
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np
import pandas as pd


def vech_indices(p: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Row and column indices of the lower triangle of a p x p matrix, stacked
    column by column.

    Example:
        >>> rows, cols = vech_indices(2)
        >>> list(zip(rows.tolist(), cols.tolist()))
        [(0, 0), (1, 0), (1, 1)]
    """
    upper_rows, upper_cols = np.triu_indices(p)
    # the upper triangle read row by row is the lower triangle read column by column
    return upper_cols, upper_rows


def vech(matrix: np.ndarray) -> np.ndarray:
    """Stack the lower-triangular part of a square matrix column by column."""
    rows, cols = vech_indices(matrix.shape[0])
    return np.asarray(matrix)[rows, cols]


def unvech(vector: np.ndarray, p: int) -> np.ndarray:
    """Inverse of :func:`vech`; entries above the diagonal are zero."""
    out = np.zeros((p, p))
    rows, cols = vech_indices(p)
    out[rows, cols] = vector
    return out


def vech_length(p: int) -> int:
    """Length of vech of a p x p matrix."""
    return p * (p + 1) // 2


def format_float(value: float) -> str:
    """
    Format a float so that it round-trips exactly.

    repr() gives the shortest string that parses back to the same double, and
    it does not depend on locale.
    """
    return repr(float(value))


def parse_int_list(text: str) -> List[int]:
    """
    Parse a comma separated list of integers.

    Example:
        >>> parse_int_list("500,1000, 2000")
        [500, 1000, 2000]
    """
    return [int(item) for item in text.split(",") if item.strip()]


def sha256_file(path: Union[str, Path]) -> str:
    """Hex SHA-256 digest of a file's bytes."""
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_csv(path: Union[str, Path], columns: Dict[str, Sequence]) -> None:
    """
    Write equal-length columns as a UTF-8 CSV with a header row and LF line
    endings. Floats are written with :func:`format_float`.
    """
    formatted = {
        name: [format_float(v) if isinstance(v, (float, np.floating)) else v for v in values]
        for name, values in columns.items()
    }
    pd.DataFrame(formatted, columns=list(columns)).to_csv(
        path, index=False, encoding="utf-8", lineterminator="\n"
    )
