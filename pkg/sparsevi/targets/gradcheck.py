"""
Finite-difference check of analytic gradients, reported per parameter block.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

import numpy as np

from sparsevi.targets.base import TargetModel

logger = logging.getLogger(__name__)

DEFAULT_STEP = 1e-5
DEFAULT_THRESHOLD = 1e-4


def finite_difference_gradient(
    fun: Callable[[np.ndarray], float],
    x: np.ndarray,
    step: float = DEFAULT_STEP,
) -> np.ndarray:
    """Central-difference gradient of ``fun`` at ``x``, one coordinate at a time."""
    x = np.array(x, dtype=float)
    grad = np.empty_like(x)
    for i in range(x.shape[0]):
        original = x[i]
        x[i] = original + step
        f_plus = fun(x)
        x[i] = original - step
        f_minus = fun(x)
        x[i] = original
        grad[i] = 0.5 * (f_plus - f_minus) / step
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    """|a − f| / max(1, |a|, |f|), componentwise."""
    scale = np.maximum(1.0, np.maximum(np.abs(analytic), np.abs(numeric)))
    return np.abs(analytic - numeric) / scale


@dataclass
class GradientCheckReport:
    """
    Worst relative error per parameter block over all checked points.

    Attributes:
        block_errors: Block name -> max relative error
        worst_index: Block name -> coordinate of θ where that maximum occurred
        points: Number of points checked
        step: Finite-difference step
        threshold: Error above which the check fails
    """
    block_errors: Dict[str, float]
    worst_index: Dict[str, int]
    points: int
    step: float
    threshold: float = DEFAULT_THRESHOLD
    nonfinite_points: int = 0

    @property
    def max_error(self) -> float:
        return max(self.block_errors.values()) if self.block_errors else 0.0

    @property
    def passed(self) -> bool:
        return self.nonfinite_points == 0 and all(
            err <= self.threshold for err in self.block_errors.values()
        )

    def failing_blocks(self) -> List[str]:
        return [name for name, err in self.block_errors.items() if not err <= self.threshold]

    def to_rows(self) -> List[Dict[str, object]]:
        return [
            {"block": name, "max_rel_error": err, "worst_index": self.worst_index[name],
             "passed": err <= self.threshold}
            for name, err in self.block_errors.items()
        ]


def random_points(
    model: TargetModel, count: int, seed: int = 0, scale: float = 0.3
) -> List[np.ndarray]:
    """``count`` points drawn N(0, scale²) componentwise from a seeded stream."""
    rng = np.random.default_rng(seed)
    return [scale * rng.standard_normal(model.dim) for _ in range(count)]


def check_gradient(
    model: TargetModel,
    points: int = 20,
    step: float = DEFAULT_STEP,
    seed: int = 0,
    scale: float = 0.3,
    threshold: float = DEFAULT_THRESHOLD,
    thetas: Optional[List[np.ndarray]] = None,
) -> GradientCheckReport:
    """
    Compare ``model.grad_log_h`` with central differences of ``model.log_h``.

    Args:
        model: Target to check
        points: Number of random points
        step: Finite-difference step
        seed: Seed of the random points
        scale: Standard deviation of the random points
        threshold: Maximum accepted relative error
        thetas: Explicit points; overrides ``points``/``seed``/``scale``

    Returns:
        GradientCheckReport with the worst error per block
    """
    thetas = thetas if thetas is not None else random_points(model, points, seed, scale)
    blocks = model.blocks()
    errors = {name: 0.0 for name in blocks}
    worst = {name: span.start for name, span in blocks.items()}
    nonfinite = 0

    def log_h(x: np.ndarray) -> float:
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            return float(model.log_h(x))

    for theta in thetas:
        evaluation = model.evaluate(theta)
        numeric = finite_difference_gradient(log_h, theta, step)
        if not evaluation.finite or not np.all(np.isfinite(numeric)):
            nonfinite += 1
            logger.warning("Non-finite gradient or finite difference at a check point")
            continue
        err = relative_error(evaluation.grad, numeric)
        for name, span in blocks.items():
            block_err = err[span]
            if block_err.size and block_err.max() > errors[name]:
                errors[name] = float(block_err.max())
                worst[name] = span.start + int(np.argmax(block_err))

    for name, value in errors.items():
        logger.debug("gradcheck block %s: max relative error %.3e", name, value)

    return GradientCheckReport(
        block_errors=errors,
        worst_index=worst,
        points=len(thetas),
        step=step,
        threshold=threshold,
        nonfinite_points=nonfinite,
    )
