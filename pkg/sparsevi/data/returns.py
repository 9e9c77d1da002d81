"""
Exchange-Rate Returns
=====================

Mean-corrected percentage log returns

    y_t = 100 × {log(r_t / r_{t−1}) − mean of the log returns}

and the stochastic volatility model built on them.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd

from sparsevi.exceptions import DataError, ParseError, SchemaError
from sparsevi.targets.sv import SvSpec
from sparsevi.utils import write_csv

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class ReturnSeries:
    """
    Attributes:
        rates: Raw rates r_0, ..., r_n in time order
        y: Mean-corrected returns, one shorter than ``rates``
    """
    rates: np.ndarray
    y: np.ndarray

    def __len__(self) -> int:
        return int(self.y.shape[0])

    def to_csv(self, path: Union[str, Path]) -> None:
        """Two columns, ``t`` (1-based) and ``y``."""
        write_csv(path, {"t": list(range(1, len(self) + 1)), "y": self.y.tolist()})


def mean_corrected_returns(rates: np.ndarray) -> ReturnSeries:
    """
    Example:
        >>> mean_corrected_returns(np.array([1.0, np.e, np.e])).y
        array([ 50., -50.])
    """
    rates = np.array(rates, dtype=float)
    if rates.ndim != 1 or rates.shape[0] < 2:
        raise DataError(f"Need at least two rates to form a return, got shape {rates.shape}")
    bad = ~np.isfinite(rates) | (rates <= 0)
    if np.any(bad):
        k = int(np.argmax(bad))
        raise DataError(f"Rates must be positive and finite; entry {k + 1} is {rates[k]!r}")
    log_returns = np.diff(np.log(rates))
    y = 100.0 * (log_returns - log_returns.mean())
    return ReturnSeries(rates=rates, y=y)


def load_rates(path: Union[str, Path], column: str = "rate") -> np.ndarray:
    """Read the ``rate`` column of a UTF-8 CSV; other columns are ignored."""
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype=str, encoding="utf-8", keep_default_na=False)
    except FileNotFoundError:
        raise DataError(f"Rates file not found: {path}") from None
    except (UnicodeDecodeError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DataError(f"Cannot read {path} as UTF-8 CSV: {e}") from None
    frame.columns = [str(c).strip() for c in frame.columns]
    if column not in frame.columns:
        raise SchemaError(column, str(path))
    values = pd.to_numeric(frame[column].str.strip(), errors="coerce").to_numpy(dtype=float)
    bad = ~np.isfinite(values)
    if np.any(bad):
        k = int(np.argmax(bad))
        raise ParseError(column, k + 2, frame[column].iloc[k])
    logger.info("Loaded %d rates from %s", values.shape[0], path)
    return values


def build_sv_model(
    series: ReturnSeries,
    sigma2_alpha: float = 100.0,
    sigma2_lambda: float = 100.0,
    sigma2_psi: float = 100.0,
) -> SvSpec:
    spec = SvSpec(
        y=series.y,
        sigma2_alpha=sigma2_alpha,
        sigma2_lambda=sigma2_lambda,
        sigma2_psi=sigma2_psi,
    )
    logger.info("SV model: n=%d, d=%d", spec.n, spec.dim)
    return spec
