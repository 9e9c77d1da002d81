"""
sparsevi Data Models
====================

Enums and dataclasses shared across the package: fit configuration, fit
results, run manifests and their plain-text serializations.
"""

import shlex
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Union

import numpy as np

from sparsevi.exceptions import DataError, ValidationError
from sparsevi.linalg.factor import CholeskyFactor, format_triplets, parse_triplets
from sparsevi.utils import format_float


# ============================================================================
# Enums
# ============================================================================

class Algorithm(str, Enum):
    """Variational family and parameterization of the Gaussian approximation."""
    ALG1_MEANFIELD = "alg1-meanfield"  # diagonal covariance factor L
    ALG1_UNRESTRICTED = "alg1-unrestricted"  # full lower-triangular covariance factor L
    ALG2_SPARSE = "alg2-sparse"  # sparse precision factor T

    @classmethod
    def parse(cls, value: Union[str, "Algorithm"]) -> "Algorithm":
        """Accept enum values and the short command-line aliases."""
        if isinstance(value, Algorithm):
            return value
        aliases = {"alg1-mf": cls.ALG1_MEANFIELD, "alg1-full": cls.ALG1_UNRESTRICTED,
                   "alg2": cls.ALG2_SPARSE}
        text = str(value).strip().lower()
        if text in aliases:
            return aliases[text]
        try:
            return cls(text)
        except ValueError:
            raise ValidationError(
                f"Unknown algorithm {value!r}; use alg1-mf, alg1-full or alg2"
            ) from None

    @property
    def is_precision(self) -> bool:
        """True when the factor parameterizes the precision matrix."""
        return self is Algorithm.ALG2_SPARSE

    @property
    def short_name(self) -> str:
        return {"alg1-meanfield": "alg1-mf", "alg1-unrestricted": "alg1-full",
                "alg2-sparse": "alg2"}[self.value]


class Estimator(str, Enum):
    """Gradient estimator family."""
    FAMILY1 = "family1"  # entropy term evaluated analytically
    FAMILY2 = "family2"  # entropy gradient sampled; cancels at a Gaussian optimum

    @classmethod
    def parse(cls, value: Union[str, int, "Estimator"]) -> "Estimator":
        if isinstance(value, Estimator):
            return value
        text = str(value).strip().lower()
        if text in ("1", "2"):
            text = f"family{text}"
        try:
            return cls(text)
        except ValueError:
            raise ValidationError(f"Unknown estimator {value!r}; use 1 or 2") from None


class Termination(str, Enum):
    """Why a fit stopped."""
    STOPPED = "stopped-by-criterion"
    DIVERGED = "diverged"
    MAX_ITERATIONS = "max-iterations"


class StopDecision(str, Enum):
    CONTINUE = "continue"
    STOP = "stop"


class GlmmFamily(str, Enum):
    """Response distribution and link of a mixed model."""
    BERNOULLI_LOGIT = "bernoulli-logit"
    POISSON_LOG = "poisson-log"


# ============================================================================
# Fit configuration
# ============================================================================

@dataclass
class FitConfig:
    """Settings of one variational fit.

    Attributes:
        algorithm: Variational family (see :class:`Algorithm`)
        estimator: Gradient estimator family
        max_iterations: Iteration budget N
        window: Iterations per lower-bound average F
        patience: Consecutive sub-maximum windows M before stopping
        rng_seed: Seed of the fit's random stream
        draws: Variates s averaged per iteration
        rho: ADADELTA decay constant
        epsilon: ADADELTA floor constant
        divergence_factor: How many window-to-window standard deviations each
            of the last M decreases must exceed to call a stop a divergence
    """
    algorithm: Algorithm = Algorithm.ALG2_SPARSE
    estimator: Estimator = Estimator.FAMILY2
    max_iterations: int = 100_000
    window: int = 2500
    patience: int = 3
    rng_seed: int = 0
    draws: int = 1
    rho: float = 0.95
    epsilon: float = 1e-6
    divergence_factor: float = 10.0

    def __post_init__(self) -> None:
        self.algorithm = Algorithm.parse(self.algorithm)
        self.estimator = Estimator.parse(self.estimator)
        if self.window < 1:
            raise ValidationError(f"window F must be at least 1, got {self.window}")
        if self.patience < 1:
            raise ValidationError(f"patience M must be at least 1, got {self.patience}")
        if self.max_iterations < self.window:
            raise ValidationError(
                f"max_iterations ({self.max_iterations}) must be at least the window F ({self.window})"
            )
        if self.draws < 1:
            raise ValidationError(f"draws must be at least 1, got {self.draws}")
        if not 0.0 < self.rho < 1.0:
            raise ValidationError(f"rho must lie in (0, 1), got {self.rho}")
        if self.epsilon <= 0.0:
            raise ValidationError(f"epsilon must be positive, got {self.epsilon}")
        if not 0 <= int(self.rng_seed) < 2**64:
            raise ValidationError(f"rng_seed must be a 64-bit unsigned integer, got {self.rng_seed}")
        self.rng_seed = int(self.rng_seed)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "algorithm": self.algorithm.value,
            "estimator": self.estimator.value,
            "max_iterations": self.max_iterations,
            "window": self.window,
            "patience": self.patience,
            "rng_seed": self.rng_seed,
            "draws": self.draws,
            "rho": self.rho,
            "epsilon": self.epsilon,
            "divergence_factor": self.divergence_factor,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "FitConfig":
        return cls(
            algorithm=Algorithm.parse(data.get("algorithm", "alg2")),
            estimator=Estimator.parse(data.get("estimator", "2")),
            max_iterations=int(data.get("max_iterations", 100_000)),
            window=int(data.get("window", 2500)),
            patience=int(data.get("patience", 3)),
            rng_seed=int(data.get("rng_seed", 0)),
            draws=int(data.get("draws", 1)),
            rho=float(data.get("rho", 0.95)),
            epsilon=float(data.get("epsilon", 1e-6)),
            divergence_factor=float(data.get("divergence_factor", 10.0)),
        )


# ============================================================================
# Fit result
# ============================================================================

@dataclass
class FitResult:
    """Outcome of a variational fit.

    Attributes:
        mu: Final variational mean
        factor: Final Cholesky factor (T for alg2-sparse, L for the alg1 variants)
        lbar_trace: Window averages of the lower-bound estimate, one per window
        termination: Why the fit stopped
        iterations_used: Completed iterations
        rng_seed: Seed the fit ran with
        algorithm: Variational family
        estimator: Gradient estimator family
        window: Window length F the trace was computed with
        nonfinite_evaluations: Iterations skipped because the target returned
            a non-finite value
        touched: Stored factor values read by the triangular kernels
    """
    mu: np.ndarray
    factor: CholeskyFactor
    lbar_trace: List[float]
    termination: Termination
    iterations_used: int
    rng_seed: int
    algorithm: Algorithm
    estimator: Estimator
    window: int
    nonfinite_evaluations: int = 0
    touched: int = 0

    @property
    def converged(self) -> bool:
        return self.termination is Termination.STOPPED

    def marginal_sd(self) -> np.ndarray:
        """Marginal posterior standard deviations of the approximation."""
        if self.algorithm.is_precision:
            variances = self.factor.marginal_variances()
        else:
            # Sigma = L L^T, so the marginal variances are the squared row norms of L
            variances = np.bincount(
                self.factor.pattern.rows,
                weights=self.factor.values ** 2,
                minlength=self.factor.dim,
            )
        return np.sqrt(variances)

    def to_text(self) -> str:
        """Key-value header, then the mean, factor triplets and trace sections."""
        lines = [
            f"algorithm: {self.algorithm.value}",
            f"estimator: {self.estimator.value}",
            f"seed: {self.rng_seed}",
            f"termination: {self.termination.value}",
            f"iterations: {self.iterations_used}",
            f"window: {self.window}",
            f"nonfinite_evaluations: {self.nonfinite_evaluations}",
            f"dim: {self.factor.dim}",
            "[mu]",
        ]
        lines.extend(format_float(v) for v in self.mu)
        lines.append("[factor]")
        lines.append(format_triplets(self.factor).rstrip("\n"))
        lines.append("[lbar_trace]")
        lines.append("window,lbar")
        lines.extend(f"{k + 1},{format_float(v)}" for k, v in enumerate(self.lbar_trace))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "FitResult":
        header: Dict[str, str] = {}
        sections: Dict[str, List[str]] = {}
        current: Optional[str] = None
        for raw in text.splitlines():
            line = raw.strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                current = line[1:-1]
                sections[current] = []
            elif current is None:
                key, _, value = line.partition(":")
                header[key.strip()] = value.strip()
            else:
                sections[current].append(line)

        missing = [name for name in ("mu", "factor", "lbar_trace") if name not in sections]
        if missing:
            raise DataError(f"Fit result is missing section(s): {', '.join(missing)}")
        try:
            mu = np.array([float(v) for v in sections["mu"]])
            trace = [float(row.split(",")[1]) for row in sections["lbar_trace"][1:]]
            return cls(
                mu=mu,
                factor=parse_triplets("\n".join(sections["factor"])),
                lbar_trace=trace,
                termination=Termination(header["termination"]),
                iterations_used=int(header["iterations"]),
                rng_seed=int(header["seed"]),
                algorithm=Algorithm.parse(header["algorithm"]),
                estimator=Estimator.parse(header["estimator"]),
                window=int(header["window"]),
                nonfinite_evaluations=int(header.get("nonfinite_evaluations", 0)),
            )
        except (KeyError, ValueError, IndexError) as e:
            raise DataError(f"Fit result could not be parsed: {e}") from None


# ============================================================================
# Run manifest
# ============================================================================

@dataclass
class RunManifest:
    """Everything needed to reproduce one command-line run.

    Attributes:
        subcommand: fit, gradcheck, varcompare or bench
        argv: The full argument vector, output directory excluded
        model: Model tag (may be empty for bench)
        data: Dataset path (may be empty)
        config: Echo of the relevant settings
        artifacts: File name -> SHA-256 digest of each written artifact
    """
    subcommand: str
    argv: List[str]
    model: str = ""
    data: str = ""
    config: Dict[str, Any] = field(default_factory=dict)
    artifacts: Dict[str, str] = field(default_factory=dict)

    FILE_NAME = "manifest.txt"

    def to_text(self) -> str:
        lines = [
            f"subcommand: {self.subcommand}",
            f"argv: {shlex.join(self.argv)}",
            f"model: {self.model}",
            f"data: {self.data}",
        ]
        lines.extend(f"config.{key}: {value}" for key, value in sorted(self.config.items()))
        lines.extend(f"artifact.{name}: {digest}" for name, digest in sorted(self.artifacts.items()))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RunManifest":
        values: Dict[str, str] = {}
        for raw in text.splitlines():
            if not raw.strip():
                continue
            key, _, value = raw.partition(":")
            values[key.strip()] = value.strip()
        if "subcommand" not in values or "argv" not in values:
            raise DataError("Manifest must contain 'subcommand' and 'argv' lines")
        return cls(
            subcommand=values["subcommand"],
            argv=shlex.split(values["argv"]),
            model=values.get("model", ""),
            data=values.get("data", ""),
            config={k[len("config."):]: v for k, v in values.items() if k.startswith("config.")},
            artifacts={k[len("artifact."):]: v for k, v in values.items() if k.startswith("artifact.")},
        )
