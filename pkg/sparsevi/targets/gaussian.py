"""
Gaussian diagnostic target N(μ*, (T* T*ᵀ)⁻¹).

The log density keeps its normalizing constant, so the lower-bound estimate
is exactly zero when the variational state equals (μ*, T*).
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from sparsevi.exceptions import DimensionMismatchError
from sparsevi.linalg.factor import CholeskyFactor
from sparsevi.linalg.pattern import SparsityPattern
from sparsevi.targets.base import TargetModel

logger = logging.getLogger(__name__)

LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(eq=False)
class GaussianTargetSpec:
    """
    Attributes:
        mean: μ*
        factor: T*, Cholesky factor of the precision Ω* = T* T*ᵀ
    """
    mean: np.ndarray
    factor: CholeskyFactor

    def __post_init__(self) -> None:
        self.mean = np.array(self.mean, dtype=float)
        if self.mean.shape != (self.factor.dim,):
            raise DimensionMismatchError(
                f"Mean length {self.mean.shape} does not match factor dimension {self.factor.dim}"
            )
        self.factor.check_diagonal()
        self.mean.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.factor.dim

    def precision(self) -> np.ndarray:
        """Dense Ω* (small dimensions only)."""
        dense = self.factor.to_dense()
        return dense @ dense.T


def gaussian_log_h(spec: GaussianTargetSpec, theta: np.ndarray) -> float:
    """log N(θ; μ*, Ω*⁻¹) = −½‖T*ᵀ(θ − μ*)‖² + log|T*| − (d/2) log 2π."""
    scaled = spec.factor.multiply_transposed(np.asarray(theta, dtype=float) - spec.mean)
    return float(-0.5 * scaled @ scaled + spec.factor.log_det() - 0.5 * spec.dim * LOG_2PI)


def gaussian_grad(spec: GaussianTargetSpec, theta: np.ndarray) -> np.ndarray:
    """−Ω*(θ − μ*), applied as two sparse products."""
    delta = np.asarray(theta, dtype=float) - spec.mean
    return -spec.factor.multiply(spec.factor.multiply_transposed(delta))


class GaussianTarget(TargetModel):
    """Exactly Gaussian target with a known optimum."""

    def __init__(self, spec: GaussianTargetSpec):
        self.spec = spec

    @property
    def dim(self) -> int:
        return self.spec.dim

    def log_h(self, theta: np.ndarray) -> float:
        return gaussian_log_h(self.spec, theta)

    def grad_log_h(self, theta: np.ndarray) -> np.ndarray:
        return gaussian_grad(self.spec, theta)

    def recommended_pattern(self) -> SparsityPattern:
        return self.spec.factor.pattern

    def blocks(self) -> Dict[str, slice]:
        return {"theta": slice(0, self.dim)}


def random_target(
    pattern: SparsityPattern,
    seed: int = 0,
    off_diagonal_scale: float = 0.1,
    mean_scale: float = 1.0,
    rng: Optional[np.random.Generator] = None,
) -> GaussianTarget:
    """
    Well-conditioned Gaussian target on ``pattern``: diagonal of T* uniform on
    [1, 1.5], off-diagonal entries N(0, off_diagonal_scale²), μ* ~ N(0, mean_scale²).
    """
    rng = rng or np.random.default_rng(seed)
    values = rng.normal(0.0, off_diagonal_scale, size=pattern.nnz)
    values[pattern.diag_index] = rng.uniform(1.0, 1.5, size=pattern.dim)
    mean = rng.normal(0.0, mean_scale, size=pattern.dim)
    spec = GaussianTargetSpec(mean=mean, factor=CholeskyFactor(pattern, values))
    logger.debug("Random Gaussian target d=%d nnz=%d seed=%d", pattern.dim, pattern.nnz, seed)
    return GaussianTarget(spec)
