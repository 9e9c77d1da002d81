"""
Base Target Module
==================

Base class for all target models: the unnormalized log posterior
log h(θ) = log p(θ) + log p(y | θ) and its gradient.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Dict, List

import numpy as np

from sparsevi.exceptions import DimensionMismatchError
from sparsevi.linalg.pattern import SparsityPattern

logger = logging.getLogger(__name__)


@dataclass
class TargetEvaluation:
    """log h(θ) and its gradient at one point.

    A non-finite value is a signal for the fit loop, not an error.
    """
    log_h: float
    grad: np.ndarray

    @property
    def finite(self) -> bool:
        return bool(np.isfinite(self.log_h) and np.all(np.isfinite(self.grad)))


class TargetModel(ABC):
    """
    Base class for target models.

    Parameters are ordered latent blocks first (b_1, ..., b_n) and global
    parameters last, which is the ordering the pattern builders assume.
    """

    @property
    @abstractmethod
    def dim(self) -> int:
        """Dimension d of θ."""

    @abstractmethod
    def log_h(self, theta: np.ndarray) -> float:
        """Unnormalized log posterior at θ."""

    @abstractmethod
    def grad_log_h(self, theta: np.ndarray) -> np.ndarray:
        """Gradient of :meth:`log_h` at θ."""

    @abstractmethod
    def recommended_pattern(self) -> SparsityPattern:
        """Sparsity pattern of T matching the posterior's conditional independence."""

    @abstractmethod
    def blocks(self) -> Dict[str, slice]:
        """Ordered parameter blocks, name -> slice of θ."""

    def parameter_names(self) -> List[str]:
        """One name per coordinate of θ, e.g. ``b[3,1]`` or ``beta[2]``."""
        names: List[str] = []
        for block, span in self.blocks().items():
            size = span.stop - span.start
            names.extend(f"{block}[{k + 1}]" for k in range(size))
        return names

    def evaluate(self, theta: np.ndarray) -> TargetEvaluation:
        """Evaluate log h and its gradient with floating-point warnings silenced."""
        theta = self._check_theta(theta)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore", under="ignore"):
            value = float(self.log_h(theta))
            grad = np.asarray(self.grad_log_h(theta), dtype=float)
        return TargetEvaluation(log_h=value, grad=grad)

    def _check_theta(self, theta: np.ndarray) -> np.ndarray:
        arr = np.asarray(theta, dtype=float)
        if arr.shape != (self.dim,):
            raise DimensionMismatchError(
                f"Parameter vector length {arr.shape} does not match model dimension {self.dim}"
            )
        return arr

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(dim={self.dim})"
