"""
Mutable state of one fit: the variational mean, the Cholesky factor, its
log-diagonal parameterization and the ADADELTA accumulators.
"""

import logging
from typing import Optional

import numpy as np

from sparsevi.engine.adadelta import DEFAULT_EPSILON, DEFAULT_RHO, AdadeltaAccumulator
from sparsevi.exceptions import DimensionMismatchError, SingularFactorError
from sparsevi.linalg.factor import CholeskyFactor
from sparsevi.linalg.pattern import SparsityPattern

logger = logging.getLogger(__name__)


class VariationalState:
    """
    (μ, T, T′) plus ADADELTA accumulators.

    ``tprime`` holds T's off-diagonal values unchanged and log T_ii on the
    diagonal; ``factor.values`` is always rebuilt from it, so the diagonal of
    the factor stays positive. With ``precision=True`` the factor is the
    Cholesky factor T of the precision matrix (θ = μ + T⁻ᵀs); otherwise it is
    the covariance factor L (θ = μ + Ls).
    """

    def __init__(
        self,
        mu: np.ndarray,
        factor: CholeskyFactor,
        precision: bool = True,
        rho: float = DEFAULT_RHO,
        epsilon: float = DEFAULT_EPSILON,
        adadelta_mu: Optional[AdadeltaAccumulator] = None,
        adadelta_factor: Optional[AdadeltaAccumulator] = None,
    ):
        mu = np.array(mu, dtype=float)
        if mu.shape != (factor.dim,):
            raise DimensionMismatchError(
                f"Mean length {mu.shape} does not match factor dimension {factor.dim}"
            )
        diag = factor.diagonal
        if np.any(~np.isfinite(diag) | (diag <= 0.0)):
            raise SingularFactorError("Factor diagonal must be strictly positive")

        self.mu = mu
        self.factor = factor
        self.precision = precision
        self.tprime = factor.values.copy()
        self.tprime[factor.pattern.diag_index] = np.log(diag)
        self.adadelta_mu = adadelta_mu or AdadeltaAccumulator.zeros(mu.size, rho, epsilon)
        self.adadelta_factor = adadelta_factor or AdadeltaAccumulator.zeros(
            factor.pattern.nnz, rho, epsilon
        )

    @classmethod
    def initial(
        cls,
        pattern: SparsityPattern,
        precision: bool = True,
        rho: float = DEFAULT_RHO,
        epsilon: float = DEFAULT_EPSILON,
    ) -> "VariationalState":
        """μ = 0, T = I (so T′ = 0)."""
        return cls(np.zeros(pattern.dim), CholeskyFactor.identity(pattern), precision, rho, epsilon)

    @property
    def dim(self) -> int:
        return self.factor.dim

    @property
    def pattern(self) -> SparsityPattern:
        return self.factor.pattern

    def draw_theta(self, s: np.ndarray) -> np.ndarray:
        """θ = μ + T⁻ᵀs (precision) or μ + Ls (covariance)."""
        if self.precision:
            return self.mu + self.factor.solve_transposed(s)
        return self.mu + self.factor.multiply(s)

    def apply_update(self, delta_mu: np.ndarray, delta_tprime: np.ndarray) -> None:
        """Add ADADELTA updates to μ and T′, then re-exponentiate T's diagonal."""
        self.mu += delta_mu
        self.tprime += delta_tprime
        self._sync_factor()

    def _sync_factor(self) -> None:
        diag_index = self.factor.pattern.diag_index
        values = self.factor.values
        values[:] = self.tprime
        values[diag_index] = np.exp(self.tprime[diag_index])

    def is_finite(self) -> bool:
        """μ, T′ finite and T's diagonal strictly positive."""
        return bool(
            np.all(np.isfinite(self.mu))
            and np.all(np.isfinite(self.tprime))
            and np.all(self.factor.diagonal > 0.0)
        )

    def copy(self) -> "VariationalState":
        return VariationalState(
            self.mu.copy(),
            self.factor.copy(),
            self.precision,
            adadelta_mu=self.adadelta_mu.copy(),
            adadelta_factor=self.adadelta_factor.copy(),
        )

    def __repr__(self) -> str:
        kind = "precision" if self.precision else "covariance"
        return f"VariationalState(dim={self.dim}, nnz={self.pattern.nnz}, factor={kind})"
