"""
sparsevi Exception Classes
==========================

Custom exceptions with helpful, human-readable messages.
Each exception includes a clear explanation, actionable suggestions and the
process exit code the command-line front end should use for it.
"""

from typing import Any, Dict, List, Optional


class SparseVIError(Exception):
    """
    Base exception for all sparsevi errors.

    Every error includes:
    - A clear, human-readable message explaining what went wrong
    - An optional short error code
    - Structured details (sizes, row numbers, column names)
    - Suggestions for how to fix the issue
    """

    exit_code: int = 1

    SUGGESTIONS: Dict[str, List[str]] = {
        "default": [
            "Check the arguments against the documented preconditions",
            "Re-run with LOG_LEVEL=DEBUG to see what happened before the failure",
        ],
    }

    def __init__(
        self,
        message: str,
        code: Optional[str] = None,
        details: Optional[Dict[str, Any]] = None,
        suggestions: Optional[List[str]] = None,
    ):
        self.message = message
        self.code = code
        self.details = details or {}
        self.suggestions = suggestions or self.SUGGESTIONS.get("default", [])
        super().__init__(self._format_message())

    def _format_message(self) -> str:
        """Format a clear, human-readable error message."""
        lines = [f"❌ {self.message}"]

        if self.code:
            lines.append(f"   Error Code: {self.code}")
        for key, value in self.details.items():
            lines.append(f"   {key}: {value}")

        if self.suggestions:
            lines.append("")
            lines.append("💡 How to fix:")
            for suggestion in self.suggestions:
                lines.append(f"   • {suggestion}")

        return "\n".join(lines)

    def __str__(self) -> str:
        return self._format_message()

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}({self.message!r}, code={self.code!r})"


class ValidationError(SparseVIError):
    """
    Raised when arguments or configuration values are invalid.

    Common causes:
    - Non-positive block sizes for a sparsity pattern
    - Vectors whose length does not match the factor dimension
    - A fit configuration with window larger than the iteration budget
    """

    SUGGESTIONS = {
        "default": [
            "Check that all parameter values are valid",
            "Sizes must be positive integers (global-parameter count may be 0)",
        ],
        "dimension": [
            "Vectors must have the same length as the factor dimension d",
            "Use pattern.dim or model.dim to size inputs",
        ],
        "window": [
            "The window F and patience M must be at least 1",
            "max_iterations must be at least the window F",
        ],
        "pattern": [
            "Every diagonal position must be present in the pattern",
            "Entries must satisfy col <= row (lower triangle only)",
            "Use SparsityPattern.dense/diagonal/glmm/ssm to build standard layouts",
        ],
    }

    def __init__(self, message: str = "Invalid arguments", **kwargs):
        suggestions = self.SUGGESTIONS["default"]
        message_lower = message.lower()

        if "dimension" in message_lower or "length" in message_lower:
            suggestions = self.SUGGESTIONS["dimension"]
        elif "window" in message_lower or "patience" in message_lower:
            suggestions = self.SUGGESTIONS["window"]
        elif "pattern" in message_lower or "diagonal" in message_lower:
            suggestions = self.SUGGESTIONS["pattern"]

        if "suggestions" not in kwargs:
            kwargs["suggestions"] = suggestions
        super().__init__(message, **kwargs)


class PatternError(ValidationError):
    """Raised when a sparsity pattern violates its structural invariants."""

    def __init__(self, message: str = "Invalid sparsity pattern", **kwargs):
        if "suggestions" not in kwargs:
            kwargs["suggestions"] = self.SUGGESTIONS["pattern"]
        super().__init__(message, **kwargs)


class DimensionMismatchError(ValidationError):
    """Raised when a vector or factor does not have the expected dimension."""

    def __init__(self, message: str = "Dimension mismatch", **kwargs):
        if "suggestions" not in kwargs:
            kwargs["suggestions"] = self.SUGGESTIONS["dimension"]
        super().__init__(message, **kwargs)


class UsageError(ValidationError):
    """Raised for bad command-line flags or paths."""

    SUGGESTIONS = {
        "default": [
            "Run `sparsevi --help` or `sparsevi <command> --help` for the flag list",
            "Paths are resolved relative to the current working directory",
        ],
    }

    def __init__(self, message: str = "Invalid command-line usage", **kwargs):
        if "suggestions" not in kwargs:
            kwargs["suggestions"] = self.SUGGESTIONS["default"]
        super().__init__(message, **kwargs)


class SingularFactorError(SparseVIError):
    """
    Raised when a factor diagonal entry is non-finite or below 1e-30.

    Checked when a factor is built or parsed and again before every solve.
    """

    SUGGESTIONS = {
        "default": [
            "Build factors through CholeskyFactor.identity or the exp-diagonal update",
            "Check the fit log for non-finite evaluations before this point",
        ],
    }

    def __init__(self, message: str = "Cholesky factor is singular", **kwargs):
        if "suggestions" not in kwargs:
            kwargs["suggestions"] = self.SUGGESTIONS["default"]
        super().__init__(message, **kwargs)


class DataError(SparseVIError):
    """
    Raised when a dataset cannot be read or does not match its schema.

    Common causes:
    - A required column is missing from the CSV header
    - A cell cannot be parsed as a number
    - A subject has no rows, or a rate is not positive
    """

    exit_code = 2

    SUGGESTIONS = {
        "default": [
            "Check the file against the documented CSV schema for this dataset",
            "Files must be UTF-8 with a header row",
        ],
    }

    def __init__(self, message: str = "Dataset could not be loaded", **kwargs):
        if "suggestions" not in kwargs:
            kwargs["suggestions"] = self.SUGGESTIONS["default"]
        super().__init__(message, **kwargs)


class SchemaError(DataError):
    """Raised when a required column is absent."""

    def __init__(self, column: str, path: Optional[str] = None, **kwargs):
        self.column = column
        details = kwargs.pop("details", {}) or {}
        if path:
            details.setdefault("File", path)
        details.setdefault("Column", column)
        super().__init__(f"Missing required column '{column}'", details=details, **kwargs)


class ParseError(DataError):
    """Raised when a cell cannot be parsed; carries the 1-based file row number."""

    def __init__(self, column: str, row: int, value: str, **kwargs):
        self.column = column
        self.row = row
        self.value = value
        super().__init__(
            f"Cannot parse {value!r} in column '{column}' at row {row}",
            details={"Column": column, "Row": row},
            **kwargs,
        )


class GradientCheckError(SparseVIError):
    """Raised when an analytic gradient disagrees with finite differences."""

    exit_code = 3

    SUGGESTIONS = {
        "default": [
            "Inspect the per-block table to see which parameter block disagrees",
            "Try a different --step; 1e-5 suits double precision",
        ],
    }

    def __init__(self, message: str = "Gradient check failed", **kwargs):
        if "suggestions" not in kwargs:
            kwargs["suggestions"] = self.SUGGESTIONS["default"]
        super().__init__(message, **kwargs)


class ReplayError(SparseVIError):
    """Raised when a replayed run does not reproduce the recorded artifacts."""

    SUGGESTIONS = {
        "default": [
            "Check that the dataset file has not changed since the original run",
            "Replay with the same package version that wrote the manifest",
        ],
    }

    def __init__(self, message: str = "Replay did not reproduce the recorded artifacts", **kwargs):
        if "suggestions" not in kwargs:
            kwargs["suggestions"] = self.SUGGESTIONS["default"]
        super().__init__(message, **kwargs)
