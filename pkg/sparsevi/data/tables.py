"""
Longitudinal Tables
===================

Typed loading of per-visit CSV files: one row per (subject, visit) with a
response and raw covariates. Subjects are re-indexed to contiguous integers
in order of first appearance; the original labels are kept.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np
import pandas as pd

from sparsevi.exceptions import DataError, ParseError, SchemaError, ValidationError

logger = logging.getLogger(__name__)


@dataclass
class TableSchema:
    """
    Required columns of a dataset.

    Attributes:
        name: Dataset name used in messages
        numeric: Columns parsed as floats
        categorical: Column -> {label: code}; labels are matched case-insensitively
            and numeric cells are accepted as codes directly
        subject: Column holding the subject identifier
    """
    name: str
    numeric: Tuple[str, ...] = ()
    categorical: Dict[str, Dict[str, float]] = field(default_factory=dict)
    subject: str = "subject"

    def __post_init__(self) -> None:
        self.numeric = tuple(self.numeric)
        overlap = set(self.numeric) & set(self.categorical)
        if overlap or self.subject in self.numeric or self.subject in self.categorical:
            raise ValidationError(
                f"Schema '{self.name}' lists a column twice: {sorted(overlap) or self.subject}"
            )
        self.categorical = {
            column: {label.strip().lower(): float(code) for label, code in labels.items()}
            for column, labels in self.categorical.items()
        }

    @property
    def columns(self) -> List[str]:
        return [self.subject, *self.numeric, *self.categorical]


@dataclass
class LongitudinalTable:
    """
    Typed rows of a longitudinal dataset, in file order.

    Attributes:
        subject: 0-based contiguous subject index per row
        subject_ids: Original subject label of each index
        columns: Column name -> float array, one entry per row
        source: Where the rows came from
    """
    subject: np.ndarray
    subject_ids: List[str]
    columns: Dict[str, np.ndarray]
    source: str = ""

    def __post_init__(self) -> None:
        n_rows = self.subject.shape[0]
        for name, values in self.columns.items():
            if values.shape != (n_rows,):
                raise DataError(f"Column '{name}' has {values.shape[0]} rows, expected {n_rows}")
        if n_rows and np.any(np.bincount(self.subject, minlength=self.n_subjects) == 0):
            raise DataError("Every subject must have at least one row")

    @property
    def n_rows(self) -> int:
        return int(self.subject.shape[0])

    @property
    def n_subjects(self) -> int:
        return len(self.subject_ids)

    def column(self, name: str) -> np.ndarray:
        try:
            return self.columns[name]
        except KeyError:
            raise SchemaError(name, self.source or None) from None

    def subject_values(self, name: str) -> np.ndarray:
        """Value of ``name`` on each subject's first row, one entry per subject."""
        values = self.column(name)
        _, first = np.unique(self.subject, return_index=True)
        return values[first]

    def subject_label(self, index: int) -> str:
        return self.subject_ids[index]


def _parse_numeric(frame: pd.DataFrame, column: str, lines: np.ndarray) -> np.ndarray:
    raw = frame[column].str.strip()
    values = pd.to_numeric(raw, errors="coerce").to_numpy(dtype=float)
    bad = ~np.isfinite(values)
    if np.any(bad):
        k = int(np.argmax(bad))
        raise ParseError(column, int(lines[k]), frame[column].iloc[k])
    return values


def _parse_categorical(
    frame: pd.DataFrame, column: str, labels: Dict[str, float], lines: np.ndarray
) -> np.ndarray:
    raw = frame[column].str.strip()
    mapped = raw.str.lower().map(labels)
    numeric = pd.to_numeric(raw, errors="coerce")
    values = mapped.fillna(numeric).to_numpy(dtype=float)
    bad = ~np.isfinite(values)
    if np.any(bad):
        k = int(np.argmax(bad))
        raise ParseError(column, int(lines[k]), frame[column].iloc[k])
    return values


def load_csv(path: Union[str, Path], schema: TableSchema) -> LongitudinalTable:
    """
    Load a UTF-8 CSV with a header row into a :class:`LongitudinalTable`.

    Raises:
        DataError: File missing or unreadable
        SchemaError: A required column is absent
        ParseError: A cell cannot be parsed (row numbers are file lines, header is line 1)
    """
    path = Path(path)
    try:
        frame = pd.read_csv(
            path, dtype=str, encoding="utf-8", keep_default_na=False, skip_blank_lines=False
        )
    except FileNotFoundError:
        raise DataError(f"Dataset file not found: {path}") from None
    except (UnicodeDecodeError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DataError(f"Cannot read {path} as UTF-8 CSV: {e}") from None

    frame = frame.fillna("")
    frame.columns = [str(c).strip() for c in frame.columns]
    # file line of each row (header is line 1), then drop blank lines
    lines = np.arange(len(frame)) + 2
    if len(frame):
        blank = frame.apply(lambda col: col.str.strip() == "").all(axis=1).to_numpy(dtype=bool)
        frame = frame.loc[~blank].reset_index(drop=True)
        lines = lines[~blank]

    for column in schema.columns:
        if column not in frame.columns:
            raise SchemaError(column, str(path))
    if frame.empty:
        raise DataError(f"Dataset {path} has no rows")

    labels = frame[schema.subject].str.strip()
    if (labels == "").any():
        k = int(np.argmax((labels == "").to_numpy()))
        raise ParseError(schema.subject, int(lines[k]), "")
    codes, uniques = pd.factorize(labels, sort=False)

    columns: Dict[str, np.ndarray] = {}
    for column in schema.numeric:
        columns[column] = _parse_numeric(frame, column, lines)
    for column, mapping in schema.categorical.items():
        columns[column] = _parse_categorical(frame, column, mapping, lines)

    table = LongitudinalTable(
        subject=codes.astype(np.int64),
        subject_ids=[str(u) for u in uniques],
        columns=columns,
        source=str(path),
    )
    logger.info(
        "Loaded %s: %d rows, %d subjects from %s",
        schema.name, table.n_rows, table.n_subjects, path,
    )
    return table
