"""
ADADELTA per-parameter step sizes.

    E[g²]  ← ρ E[g²] + (1 − ρ) g²
    Δ      = √(E[Δ²] + ε) / √(E[g²] + ε) ⊙ g
    E[Δ²]  ← ρ E[Δ²] + (1 − ρ) Δ²

The update is added to the parameter (gradient ascent).
"""

from dataclasses import dataclass

import numpy as np

from sparsevi.exceptions import DimensionMismatchError, ValidationError

DEFAULT_RHO = 0.95
DEFAULT_EPSILON = 1e-6


@dataclass
class AdadeltaAccumulator:
    """
    Running averages for one parameter vector.

    Attributes:
        eg2: Decayed average of squared gradients
        edx2: Decayed average of squared updates
        rho: Decay constant
        epsilon: Floor inside both square roots
    """
    eg2: np.ndarray
    edx2: np.ndarray
    rho: float = DEFAULT_RHO
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self) -> None:
        if not 0.0 < self.rho < 1.0:
            raise ValidationError(f"rho must lie in (0, 1), got {self.rho}")
        if self.epsilon <= 0.0:
            raise ValidationError(f"epsilon must be positive, got {self.epsilon}")
        if self.eg2.shape != self.edx2.shape:
            raise DimensionMismatchError("eg2 and edx2 must have the same length")

    @classmethod
    def zeros(
        cls, size: int, rho: float = DEFAULT_RHO, epsilon: float = DEFAULT_EPSILON
    ) -> "AdadeltaAccumulator":
        return cls(eg2=np.zeros(size), edx2=np.zeros(size), rho=rho, epsilon=epsilon)

    def step(self, grad: np.ndarray) -> np.ndarray:
        """Fold in one gradient and return the update Δ."""
        g = np.asarray(grad, dtype=float)
        if g.shape != self.eg2.shape:
            raise DimensionMismatchError(
                f"Gradient length {g.shape} does not match accumulator length {self.eg2.shape}"
            )
        rho = self.rho
        self.eg2 *= rho
        self.eg2 += (1.0 - rho) * g * g
        delta = np.sqrt(self.edx2 + self.epsilon) / np.sqrt(self.eg2 + self.epsilon) * g
        self.edx2 *= rho
        self.edx2 += (1.0 - rho) * delta * delta
        return delta

    def copy(self) -> "AdadeltaAccumulator":
        return AdadeltaAccumulator(self.eg2.copy(), self.edx2.copy(), self.rho, self.epsilon)


def adadelta_step(acc: AdadeltaAccumulator, grad: np.ndarray) -> np.ndarray:
    """Functional form of :meth:`AdadeltaAccumulator.step`."""
    return acc.step(grad)
