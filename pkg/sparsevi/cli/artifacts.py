"""
Run-directory artifacts: fit results, posterior summaries, traces, bands and
the manifest with checksums of everything written.
"""

import logging
import os
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np

from sparsevi.models import FitResult, RunManifest
from sparsevi.utils import sha256_file, write_csv

logger = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "SPARSEVI_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "runs"

FIT_RESULT_FILE = "fit_result.txt"
SUMMARY_FILE = "posterior_summary.csv"
TRACE_FILE = "lbar_trace.csv"
BAND_FILE = "volatility_band.csv"
LOWER_BOUND_FILE = "lower_bound.csv"


def resolve_run_dir(out: Optional[str], run_name: str) -> Path:
    """``--out`` if given, else ``$SPARSEVI_OUTPUT_DIR/<run_name>`` (default ``runs/``)."""
    if out:
        path = Path(out)
    else:
        path = Path(os.getenv(OUTPUT_DIR_ENV, DEFAULT_OUTPUT_DIR)) / run_name
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_text(path: Union[str, Path], text: str) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(text)
    return path


def write_fit_result(run_dir: Path, result: FitResult) -> Path:
    return write_text(run_dir / FIT_RESULT_FILE, result.to_text())


def write_summary(
    run_dir: Path, names: Sequence[str], mean: np.ndarray, sd: np.ndarray
) -> Path:
    """One row per parameter: index, name, variational mean and marginal SD."""
    path = run_dir / SUMMARY_FILE
    write_csv(path, {
        "index": list(range(1, len(names) + 1)),
        "name": list(names),
        "mean": [float(v) for v in mean],
        "sd": [float(v) for v in sd],
    })
    return path


def write_lbar_trace(run_dir: Path, trace: Sequence[float], window: int) -> Path:
    path = run_dir / TRACE_FILE
    write_csv(path, {
        "window": list(range(1, len(trace) + 1)),
        "iteration": [window * (k + 1) for k in range(len(trace))],
        "lbar": [float(v) for v in trace],
    })
    return path


def write_volatility_band(run_dir: Path, mean: np.ndarray, sd: np.ndarray) -> Path:
    """Per-time log-volatility mean with a ±1 SD band."""
    path = run_dir / BAND_FILE
    write_csv(path, {
        "t": list(range(1, len(mean) + 1)),
        "mean": [float(v) for v in mean],
        "sd": [float(v) for v in sd],
        "lower": [float(v) for v in mean - sd],
        "upper": [float(v) for v in mean + sd],
    })
    return path


def strip_output_flag(argv: Sequence[str]) -> List[str]:
    """Drop ``--out DIR`` / ``--out=DIR`` so the manifest does not pin a location."""
    cleaned: List[str] = []
    skip = False
    for token in argv:
        if skip:
            skip = False
            continue
        if token == "--out":
            skip = True
            continue
        if token.startswith("--out="):
            continue
        cleaned.append(token)
    return cleaned


def checksum_artifacts(run_dir: Path, names: Iterable[str]) -> Dict[str, str]:
    return {name: sha256_file(run_dir / name) for name in sorted(names)}


def write_manifest(
    run_dir: Path,
    argv: Sequence[str],
    subcommand: str,
    artifacts: Iterable[Path],
    model: str = "",
    data: str = "",
    config: Optional[Dict[str, Any]] = None,
) -> RunManifest:
    manifest = RunManifest(
        subcommand=subcommand,
        argv=strip_output_flag(argv),
        model=model,
        data=data,
        config=dict(config or {}),
        artifacts=checksum_artifacts(run_dir, (Path(p).name for p in artifacts)),
    )
    write_text(run_dir / RunManifest.FILE_NAME, manifest.to_text())
    logger.info("Wrote %d artifacts and manifest to %s", len(manifest.artifacts), run_dir)
    return manifest


def compare_artifacts(
    run_dir: Path, manifest: RunManifest, skip: Iterable[str] = ()
) -> List[str]:
    """Names of recorded artifacts that are missing or differ in ``run_dir``."""
    skipped = set(skip)
    mismatched = []
    for name, digest in sorted(manifest.artifacts.items()):
        if name in skipped:
            continue
        path = run_dir / name
        if not path.exists() or sha256_file(path) != digest:
            mismatched.append(name)
    return mismatched
