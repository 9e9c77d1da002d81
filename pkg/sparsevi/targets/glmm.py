"""
Generalized Linear Mixed Models
===============================

Random-effects models with a Bernoulli-logit or Poisson-log response:

    y_ij | b_i ~ F(h_1'(η_ij)),  η_ij = X_ij β + Z_ij b_i,  b_i ~ N(0, W Wᵀ)

θ is laid out as (b_1, ..., b_n, β, ζ) with ζ the column-major vech of W
after taking logs of its diagonal.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import sparse
from scipy.linalg import solve_triangular
from scipy.special import expit

from sparsevi.exceptions import DimensionMismatchError, ValidationError
from sparsevi.linalg.pattern import SparsityPattern
from sparsevi.models import GlmmFamily
from sparsevi.targets.base import TargetModel
from sparsevi.utils import unvech, vech, vech_indices, vech_length

logger = logging.getLogger(__name__)


# ============================================================================
# ζ <-> W
# ============================================================================

def decode_zeta(zeta: np.ndarray, p: int) -> np.ndarray:
    """
    Lower-triangular W from ζ: undo the column-major vech, then exponentiate
    the diagonal.

    Example:
        >>> decode_zeta(np.array([0.0, 3.0, 0.0]), 2)
        array([[1., 0.],
               [3., 1.]])
    """
    zeta = np.asarray(zeta, dtype=float)
    if zeta.shape != (vech_length(p),):
        raise DimensionMismatchError(
            f"zeta length {zeta.shape} does not match p(p+1)/2 = {vech_length(p)} for p={p}"
        )
    W = unvech(zeta, p)
    diag = np.arange(p)
    W[diag, diag] = np.exp(W[diag, diag])
    return W


def encode_zeta(W: np.ndarray) -> np.ndarray:
    """Inverse of :func:`decode_zeta`; W must have a positive diagonal."""
    W = np.array(W, dtype=float)
    diag = np.arange(W.shape[0])
    if np.any(W[diag, diag] <= 0.0):
        raise ValidationError("W must have a strictly positive diagonal")
    W[diag, diag] = np.log(W[diag, diag])
    return vech(W)


# ============================================================================
# GlmmSpec
# ============================================================================

@dataclass(eq=False)
class GlmmSpec:
    """
    Data and priors of a mixed model.

    Observations are stored long: one row of ``X`` and ``Z`` per response,
    with ``subject`` giving the 0-based subject index of that row.

    Attributes:
        family: Response distribution and link
        y: Responses, length N
        X: Fixed-effect covariates, N x kβ
        Z: Random-effect covariates, N x p
        subject: 0-based subject index per row, length N
        n_subjects: Number of subjects n
        sigma2_beta: Prior variance of each β component
        sigma2_zeta: Prior variance of each ζ component
        fixed_names: Optional labels for the β components
        random_names: Optional labels for the random-effect components
    """
    family: GlmmFamily
    y: np.ndarray
    X: np.ndarray
    Z: np.ndarray
    subject: np.ndarray
    n_subjects: int
    sigma2_beta: float = 100.0
    sigma2_zeta: float = 100.0
    fixed_names: Optional[List[str]] = None
    random_names: Optional[List[str]] = None
    _incidence: sparse.csr_matrix = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        self.family = GlmmFamily(self.family)
        self.y = np.array(self.y, dtype=float)
        self.X = np.atleast_2d(np.array(self.X, dtype=float))
        self.Z = np.atleast_2d(np.array(self.Z, dtype=float))
        self.subject = np.array(self.subject, dtype=np.int64)
        self.n_subjects = int(self.n_subjects)
        n_obs = self.y.shape[0]

        if self.y.ndim != 1 or n_obs == 0:
            raise ValidationError("Responses y must be a non-empty 1-D array")
        if self.X.shape[0] != n_obs or self.Z.shape[0] != n_obs or self.subject.shape != (n_obs,):
            raise DimensionMismatchError(
                f"X, Z and subject must have one row per response ({n_obs}); got "
                f"X {self.X.shape}, Z {self.Z.shape}, subject {self.subject.shape}"
            )
        if self.n_subjects < 1 or self.subject.min() < 0 or self.subject.max() >= self.n_subjects:
            raise ValidationError(
                f"Subject indices must lie in [0, {self.n_subjects}) with n_subjects >= 1"
            )
        counts = np.bincount(self.subject, minlength=self.n_subjects)
        if np.any(counts == 0):
            raise ValidationError(
                f"Every subject needs at least one observation; subject {int(np.argmin(counts))} has none"
            )
        if self.sigma2_beta <= 0 or self.sigma2_zeta <= 0:
            raise ValidationError("Prior variances sigma2_beta and sigma2_zeta must be positive")
        for name, arr in (("y", self.y), ("X", self.X), ("Z", self.Z)):
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"{name} contains non-finite entries")
        if self.family is GlmmFamily.BERNOULLI_LOGIT and np.any((self.y != 0) & (self.y != 1)):
            raise ValidationError("Bernoulli responses must be 0 or 1")
        if self.family is GlmmFamily.POISSON_LOG and np.any((self.y < 0) | (self.y != np.round(self.y))):
            raise ValidationError("Poisson responses must be non-negative integers")
        if self.fixed_names is not None and len(self.fixed_names) != self.k_beta:
            raise DimensionMismatchError(
                f"fixed_names length {len(self.fixed_names)} does not match kβ = {self.k_beta}"
            )
        if self.random_names is not None and len(self.random_names) != self.p:
            raise DimensionMismatchError(
                f"random_names length {len(self.random_names)} does not match p = {self.p}"
            )

        # subject-by-row incidence, sums row quantities per subject
        self._incidence = sparse.csr_matrix(
            (np.ones(n_obs), (self.subject, np.arange(n_obs))),
            shape=(self.n_subjects, n_obs),
        )
        for arr in (self.y, self.X, self.Z, self.subject):
            arr.setflags(write=False)

    @property
    def n_obs(self) -> int:
        return int(self.y.shape[0])

    @property
    def p(self) -> int:
        return int(self.Z.shape[1])

    @property
    def k_beta(self) -> int:
        return int(self.X.shape[1])

    @property
    def n_zeta(self) -> int:
        return vech_length(self.p)

    @property
    def dim(self) -> int:
        return self.n_subjects * self.p + self.k_beta + self.n_zeta

    def unpack(self, theta: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Split θ into (B as n x p, β, ζ)."""
        nb = self.n_subjects * self.p
        B = theta[:nb].reshape(self.n_subjects, self.p)
        beta = theta[nb:nb + self.k_beta]
        zeta = theta[nb + self.k_beta:]
        return B, beta, zeta

    def linear_predictor(self, B: np.ndarray, beta: np.ndarray) -> np.ndarray:
        return self.X @ beta + np.einsum("ij,ij->i", self.Z, B[self.subject])


def _h1(family: GlmmFamily, eta: np.ndarray) -> np.ndarray:
    if family is GlmmFamily.BERNOULLI_LOGIT:
        return np.logaddexp(0.0, eta)
    return np.exp(eta)


def _h1_prime(family: GlmmFamily, eta: np.ndarray) -> np.ndarray:
    if family is GlmmFamily.BERNOULLI_LOGIT:
        return expit(eta)
    return np.exp(eta)


# ============================================================================
# Density and gradient
# ============================================================================

def glmm_log_h(spec: GlmmSpec, theta: np.ndarray) -> float:
    """
    log h(θ) without the θ-free constant:

        Σ_ij {y_ij η_ij − h_1(η_ij)} − n log|W| − ½ Σ_i b_iᵀ(WWᵀ)⁻¹b_i
            − βᵀβ / 2σ_β² − ζᵀζ / 2σ_ζ²
    """
    B, beta, zeta = spec.unpack(np.asarray(theta, dtype=float))
    W = decode_zeta(zeta, spec.p)
    eta = spec.linear_predictor(B, beta)
    loglik = float(np.sum(spec.y * eta - _h1(spec.family, eta)))

    log_det_w = float(np.sum(np.diag(unvech(zeta, spec.p))))
    scaled = solve_triangular(W, B.T, lower=True, check_finite=False)
    random_effects = -spec.n_subjects * log_det_w - 0.5 * float(np.sum(scaled ** 2))

    prior = -float(beta @ beta) / (2.0 * spec.sigma2_beta) - float(zeta @ zeta) / (2.0 * spec.sigma2_zeta)
    return loglik + random_effects + prior


def glmm_grad(spec: GlmmSpec, theta: np.ndarray) -> np.ndarray:
    """
    Concatenated (∇_{b_1}, ..., ∇_{b_n}, ∇_β, ∇_ζ) of :func:`glmm_log_h`.

    With r = y − h_1'(η) and P = W⁻ᵀW⁻¹:

        ∇_{b_i} = Σ_j r_ij Z_ij − P b_i
        ∇_β     = Σ_ij r_ij X_ij − β / σ_β²
        ∇_ζ     = −n 1_diag + 1_ζ ⊙ vech(A) − ζ / σ_ζ²,  A = tril(P (Σ_i b_i b_iᵀ) W⁻ᵀ)

    where 1_ζ holds W_ii on diagonal positions and 1 elsewhere.
    """
    B, beta, zeta = spec.unpack(np.asarray(theta, dtype=float))
    p = spec.p
    W = decode_zeta(zeta, p)
    eta = spec.linear_predictor(B, beta)
    resid = spec.y - _h1_prime(spec.family, eta)

    w_inv = solve_triangular(W, np.eye(p), lower=True, check_finite=False)
    precision = w_inv.T @ w_inv

    grad_b = spec._incidence @ (resid[:, None] * spec.Z) - B @ precision
    grad_beta = spec.X.T @ resid - beta / spec.sigma2_beta

    A = np.tril(precision @ (B.T @ B) @ w_inv.T)
    rows, cols = vech_indices(p)
    on_diag = rows == cols
    chain = np.where(on_diag, W[rows, cols], 1.0)
    grad_zeta = -spec.n_subjects * on_diag + chain * A[rows, cols] - zeta / spec.sigma2_zeta

    return np.concatenate([np.asarray(grad_b).ravel(), grad_beta, grad_zeta])


# ============================================================================
# Target
# ============================================================================

class GlmmTarget(TargetModel):
    """
    Mixed-model posterior as a :class:`TargetModel`.

    Example:
        >>> spec = GlmmSpec(GlmmFamily.POISSON_LOG, y=[0.0], X=[[1.0]], Z=[[1.0]],
        ...                 subject=[0], n_subjects=1)
        >>> GlmmTarget(spec).log_h(np.zeros(3))
        -1.0
    """

    def __init__(self, spec: GlmmSpec):
        self.spec = spec

    @property
    def dim(self) -> int:
        return self.spec.dim

    def log_h(self, theta: np.ndarray) -> float:
        return glmm_log_h(self.spec, theta)

    def grad_log_h(self, theta: np.ndarray) -> np.ndarray:
        return glmm_grad(self.spec, theta)

    def recommended_pattern(self) -> SparsityPattern:
        spec = self.spec
        return SparsityPattern.glmm(spec.n_subjects, spec.p, spec.k_beta + spec.n_zeta)

    def blocks(self) -> Dict[str, slice]:
        nb = self.spec.n_subjects * self.spec.p
        kb = self.spec.k_beta
        return {
            "b": slice(0, nb),
            "beta": slice(nb, nb + kb),
            "zeta": slice(nb + kb, self.dim),
        }

    def parameter_names(self) -> List[str]:
        spec = self.spec
        random = spec.random_names or [str(k + 1) for k in range(spec.p)]
        fixed = spec.fixed_names or [str(k + 1) for k in range(spec.k_beta)]
        names = [f"b[{i + 1},{r}]" for i in range(spec.n_subjects) for r in random]
        names.extend(f"beta[{name}]" for name in fixed)
        rows, cols = vech_indices(spec.p)
        names.extend(f"zeta[{r + 1},{c + 1}]" for r, c in zip(rows.tolist(), cols.tolist()))
        return names

    def __repr__(self) -> str:
        spec = self.spec
        return (
            f"GlmmTarget(family={spec.family.value}, n={spec.n_subjects}, p={spec.p}, "
            f"k_beta={spec.k_beta}, dim={self.dim})"
        )
