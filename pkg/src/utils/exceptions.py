"""
Exception hierarchy for the credal conformal toolkit.

Every error raised by the library derives from CredalError and carries the
process exit code the CLI uses when the error reaches a command boundary:

- 2: input or validation problems
- 3: empty or degenerate data
- 4: internal math failures
"""

from typing import Optional


class CredalError(Exception):
    """Base class for all library errors."""

    exit_code = 4


class ValidationError(CredalError):
    """Invalid input values, files or flags."""

    exit_code = 2


class DimensionMismatch(ValidationError):
    """Two vectors or records disagree on the number of classes."""


class LengthMismatch(ValidationError):
    """Parallel sequences have different lengths."""


class InvalidSpec(ValidationError):
    """Synthetic generator parameters are inconsistent."""


class UnsupportedDimension(ValidationError):
    """An operation was asked for a label space it cannot handle."""


class LatticeTooLarge(ValidationError):
    """A simplex lattice would exceed the point budget."""


class DatasetValidationError(ValidationError):
    """A dataset file failed to parse; remembers the offending line."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyCalibration(CredalError):
    """No calibration records were supplied."""

    exit_code = 3


class MathError(CredalError):
    """A numerical routine could not produce a valid result."""

    exit_code = 4


class EmptyRegion(MathError):
    """The half-space cut misses the simplex entirely (max_k E_k < tau)."""


class SureLossViolation(MathError):
    """Probability bounds incur sure loss (sum of lowers > 1 or uppers < 1)."""


class LabelSpaceTooLarge(MathError):
    """Subset enumeration was requested beyond the configured cap."""


class PointFailure(MathError):
    """A per-point computation failed; wraps the cause with the point id."""

    def __init__(self, point_id: str, cause: Exception):
        self.point_id = point_id
        self.cause = cause
        super().__init__(f"point {point_id}: {type(cause).__name__}: {cause}")
