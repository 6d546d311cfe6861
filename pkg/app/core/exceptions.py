"""
Custom exceptions for the avalanche toolkit.

Every error logs itself once on construction. The CLI maps the hierarchy
onto its exit codes in app.main.
"""

import logging
from typing import Any, Dict, Optional

logger = logging.getLogger(__name__)


class AvalancheError(Exception):
    """Base class for all toolkit errors"""
    exit_code: int = 2

    def __init__(self, message: str, original_error: Optional[Exception] = None):
        super().__init__(message)
        self.original_error = original_error
        logger.error(f"{type(self).__name__}: {message}", exc_info=original_error)


class ValidationError(AvalancheError):
    """Raised when inputs or configuration values are out of range"""
    def __init__(self, message: str, data: Optional[Dict[str, Any]] = None, original_error: Optional[Exception] = None):
        self.data = data
        super().__init__(message, original_error)


class InvariantViolation(AvalancheError):
    """Raised when a model invariant fails; always an implementation bug"""
    exit_code = 1

    def __init__(self, message: str, diagnostic: Optional[Dict[str, Any]] = None, original_error: Optional[Exception] = None):
        self.diagnostic = diagnostic or {}
        super().__init__(f"{message} | diagnostic={self.diagnostic}", original_error)


class SeriesError(AvalancheError):
    """Base class for power series errors"""
    def __init__(self, message: str, original_error: Optional[Exception] = None):
        super().__init__(message, original_error)


class NonUnitConstantTermError(SeriesError):
    """Raised when a reciprocal is requested for a series with zero constant term"""
    def __init__(self, message: str = "Reciprocal requires a nonzero constant term", original_error: Optional[Exception] = None):
        super().__init__(message, original_error)


class SeriesTruncationError(SeriesError):
    """Raised when a certified evaluation would need more terms than allowed"""
    def __init__(self, message: str, required_order: int, original_error: Optional[Exception] = None):
        self.required_order = required_order
        super().__init__(f"{message} (required order {required_order})", original_error)


class OracleLimitError(AvalancheError):
    """Raised when an exhaustive enumeration is asked for too many steps"""
    def __init__(self, max_len: int, limit: int, original_error: Optional[Exception] = None):
        self.max_len = max_len
        self.limit = limit
        super().__init__(f"Refusing enumeration of 2^{max_len} paths (limit 2^{limit})", original_error)


class QuadratureError(AvalancheError):
    """Raised when adaptive quadrature misses its tolerance"""
    def __init__(self, message: str, achieved_tolerance: float, original_error: Optional[Exception] = None):
        self.achieved_tolerance = achieved_tolerance
        super().__init__(f"{message} (achieved {achieved_tolerance:.3e})", original_error)


class ExcursionRejectedError(AvalancheError):
    """Raised when a path is not a Type II terminated trading excursion"""
    def __init__(self, message: str, steps: Optional[tuple] = None, original_error: Optional[Exception] = None):
        self.steps = steps
        super().__init__(message, original_error)


class UndefinedMomentsError(AvalancheError):
    """Raised when moments are requested from too few uncensored samples"""
    def __init__(self, message: str = "Moments undefined: fewer than two uncensored samples", original_error: Optional[Exception] = None):
        super().__init__(message, original_error)


class ArtifactIOError(AvalancheError):
    """Raised when reading or writing an artifact fails"""
    exit_code = 3

    def __init__(self, message: str, path: Optional[str] = None, original_error: Optional[Exception] = None):
        self.path = path
        super().__init__(message, original_error)


class OutputCollisionError(ArtifactIOError):
    """Raised when an output file already exists and --force was not given"""
    def __init__(self, path: str, original_error: Optional[Exception] = None):
        super().__init__(f"Output already exists: {path} (use --force to overwrite)", path, original_error)


class VerificationFailure(AvalancheError):
    """Raised when at least one verification check fails"""
    exit_code = 1

    def __init__(self, failed: int, total: int, original_error: Optional[Exception] = None):
        self.failed = failed
        self.total = total
        super().__init__(f"{failed} of {total} checks failed", original_error)


__all__ = [
    'AvalancheError',
    'ValidationError',
    'InvariantViolation',
    'SeriesError',
    'NonUnitConstantTermError',
    'SeriesTruncationError',
    'OracleLimitError',
    'QuadratureError',
    'ExcursionRejectedError',
    'UndefinedMomentsError',
    'ArtifactIOError',
    'OutputCollisionError',
    'VerificationFailure',
]
