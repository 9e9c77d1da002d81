"""
sparsevi Data
=============

Dataset loaders, design-matrix builders and synthetic generators.
"""

from sparsevi.data.glmm import (
    EPILEPSY_SCHEMA,
    POLYPHARMACY_SCHEMA,
    TOENAIL_SCHEMA,
    build_epilepsy_model,
    build_polypharmacy_model,
    build_toenail_model,
    mhv_indicators,
)
from sparsevi.data.returns import ReturnSeries, build_sv_model, load_rates, mean_corrected_returns
from sparsevi.data.simulate import simulate_glmm, simulate_sv
from sparsevi.data.tables import LongitudinalTable, TableSchema, load_csv

__all__ = [
    "TableSchema",
    "LongitudinalTable",
    "load_csv",
    "EPILEPSY_SCHEMA",
    "TOENAIL_SCHEMA",
    "POLYPHARMACY_SCHEMA",
    "build_epilepsy_model",
    "build_toenail_model",
    "build_polypharmacy_model",
    "mhv_indicators",
    "ReturnSeries",
    "mean_corrected_returns",
    "load_rates",
    "build_sv_model",
    "simulate_glmm",
    "simulate_sv",
]
