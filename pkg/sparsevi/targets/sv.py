"""
Stochastic Volatility
=====================

Zero-mean returns with a latent stationary AR(1) log-volatility:

    y_t | b_t ~ N(0, exp(λ + σ b_t)),        t = 1..n
    b_{t+1} | b_t ~ N(φ b_t, 1),             t = 1..n-1
    b_1 ~ N(0, 1 / (1 − φ²))

with σ = e^α and φ = e^ψ / (e^ψ + 1). θ = (b_1, ..., b_n, α, λ, ψ).
"""

import logging
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np
from scipy.special import expit, log_expit

from sparsevi.exceptions import ValidationError
from sparsevi.linalg.pattern import SparsityPattern
from sparsevi.targets.base import TargetModel

logger = logging.getLogger(__name__)

N_GLOBAL = 3


@dataclass(eq=False)
class SvSpec:
    """
    Returns and priors of the stochastic volatility model.

    Attributes:
        y: Mean-corrected returns, length n >= 2
        sigma2_alpha: Prior variance of α = log σ
        sigma2_lambda: Prior variance of λ
        sigma2_psi: Prior variance of ψ = logit φ
    """
    y: np.ndarray
    sigma2_alpha: float = 100.0
    sigma2_lambda: float = 100.0
    sigma2_psi: float = 100.0

    def __post_init__(self) -> None:
        self.y = np.array(self.y, dtype=float)
        if self.y.ndim != 1 or self.y.shape[0] < 2:
            raise ValidationError(f"SV model needs at least 2 returns, got shape {self.y.shape}")
        if not np.all(np.isfinite(self.y)):
            raise ValidationError("Returns y contain non-finite entries")
        for name in ("sigma2_alpha", "sigma2_lambda", "sigma2_psi"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"Prior variance {name} must be positive")
        self.y.setflags(write=False)

    @property
    def n(self) -> int:
        return int(self.y.shape[0])

    @property
    def dim(self) -> int:
        return self.n + N_GLOBAL

    def unpack(self, theta: np.ndarray) -> Tuple[np.ndarray, float, float, float]:
        """Split θ into (b, α, λ, ψ)."""
        n = self.n
        return theta[:n], float(theta[n]), float(theta[n + 1]), float(theta[n + 2])


def sv_log_h(spec: SvSpec, theta: np.ndarray) -> float:
    """log h(θ) with every θ-free constant dropped."""
    b, alpha, lam, psi = spec.unpack(np.asarray(theta, dtype=float))
    n = spec.n
    sigma = np.exp(alpha)
    phi = expit(psi)
    one_minus_phi2 = expit(-psi) * (1.0 + phi)

    scaled = spec.y ** 2 * np.exp(-lam - sigma * b)
    ar_resid = b[1:] - phi * b[:-1]

    value = -0.5 * n * lam - 0.5 * sigma * np.sum(b) - 0.5 * np.sum(scaled)
    value += -0.5 * np.sum(ar_resid ** 2)
    value += 0.5 * (log_expit(-psi) + np.log1p(phi)) - 0.5 * one_minus_phi2 * b[0] ** 2
    value += -alpha ** 2 / (2.0 * spec.sigma2_alpha)
    value += -lam ** 2 / (2.0 * spec.sigma2_lambda)
    value += -psi ** 2 / (2.0 * spec.sigma2_psi)
    return float(value)


def sv_grad(spec: SvSpec, theta: np.ndarray) -> np.ndarray:
    """
    Gradient of :func:`sv_log_h`, (∇_b, ∇_α, ∇_λ, ∇_ψ).

    With e_t = y_t² exp(−λ − σ b_t) and r_t = b_{t+1} − φ b_t:

        ∇_{b_t} = −σ/2 + σ e_t / 2 + φ r_t [t < n] − r_{t−1} [t > 1] − (1 − φ²) b_1 [t = 1]
        ∇_α     = −(σ/2) Σ b_t + (σ/2) Σ e_t b_t − α / σ_α²
        ∇_λ     = −n/2 + ½ Σ e_t − λ / σ_λ²
        ∇_ψ     = φ(1 − φ) (φ b_1² + Σ r_t b_t) − φ² / (1 + φ) − ψ / σ_ψ²
    """
    b, alpha, lam, psi = spec.unpack(np.asarray(theta, dtype=float))
    n = spec.n
    sigma = np.exp(alpha)
    phi = expit(psi)
    one_minus_phi2 = expit(-psi) * (1.0 + phi)

    scaled = spec.y ** 2 * np.exp(-lam - sigma * b)
    ar_resid = b[1:] - phi * b[:-1]

    grad_b = -0.5 * sigma + 0.5 * sigma * scaled
    grad_b[:-1] += phi * ar_resid
    grad_b[1:] -= ar_resid
    grad_b[0] -= one_minus_phi2 * b[0]

    grad = np.empty(n + N_GLOBAL)
    grad[:n] = grad_b
    grad[n] = -0.5 * sigma * np.sum(b) + 0.5 * sigma * np.sum(scaled * b) - alpha / spec.sigma2_alpha
    grad[n + 1] = -0.5 * n + 0.5 * np.sum(scaled) - lam / spec.sigma2_lambda
    dphi = phi * (1.0 - phi)
    grad[n + 2] = (
        dphi * (phi * b[0] ** 2 + np.sum(ar_resid * b[:-1]))
        - phi ** 2 / (1.0 + phi)
        - psi / spec.sigma2_psi
    )
    return grad


class SvTarget(TargetModel):
    """Stochastic volatility posterior as a :class:`TargetModel`."""

    def __init__(self, spec: SvSpec):
        self.spec = spec

    @property
    def dim(self) -> int:
        return self.spec.dim

    def log_h(self, theta: np.ndarray) -> float:
        return sv_log_h(self.spec, theta)

    def grad_log_h(self, theta: np.ndarray) -> np.ndarray:
        return sv_grad(self.spec, theta)

    def recommended_pattern(self) -> SparsityPattern:
        return SparsityPattern.ssm(self.spec.n, 1, N_GLOBAL)

    def blocks(self) -> Dict[str, slice]:
        n = self.spec.n
        return {
            "b": slice(0, n),
            "alpha": slice(n, n + 1),
            "lambda": slice(n + 1, n + 2),
            "psi": slice(n + 2, n + 3),
        }

    def __repr__(self) -> str:
        return f"SvTarget(n={self.spec.n}, dim={self.dim})"
