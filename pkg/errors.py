"""
Errors module for Sparse Forge.
Exception hierarchy with stable error codes shared by the library and the CLI.
"""
from typing import Any, Dict, Optional


class SparseForgeError(Exception):
    """Base class for every error raised by Sparse Forge."""

    code = "ERROR"

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        """Serialize the error for reports."""
        return {"code": self.code, "message": self.message, "details": self.details}


class ConfigError(SparseForgeError):
    code = "CONFIG"


class SerializationError(SparseForgeError):
    code = "SERIALIZATION"


class InvalidIntervalError(SparseForgeError):
    code = "INVALID_INTERVAL"


class IncomparableError(SparseForgeError):
    """A certified comparison could not be resolved within the precision ceiling."""

    code = "INCOMPARABLE"


class MagnitudeOverflowError(SparseForgeError):
    """Raised when |q| exceeds the exponential magnitude ceiling."""

    code = "OVERFLOW"


class MagnitudeUnderflowError(SparseForgeError):
    """Raised when a value is too small for numeric enclosure; use TowerMag instead."""

    code = "UNDERFLOW"


class DepthExceededError(SparseForgeError):
    code = "DEPTH_EXCEEDED"


class LengthsNotSummableError(SparseForgeError):
    code = "LENGTHS_NOT_SUMMABLE"


class DegenerateProfileError(SparseForgeError):
    code = "DEGENERATE"


class ProfileMismatchError(SparseForgeError):
    """Closed-form and greedy covering numbers disagree."""

    code = "PROFILE_MISMATCH"


class UnsupportedDimensionError(SparseForgeError):
    code = "UNSUPPORTED_DIMENSION"


class TieError(SparseForgeError):
    code = "TIE"


class NoGapsError(SparseForgeError):
    code = "NO_GAPS"


class OverlappingGapsError(SparseForgeError):
    code = "OVERLAPPING_GAPS"


class NoChainError(SparseForgeError):
    code = "NO_CHAIN"


class CollisionError(SparseForgeError):
    code = "COLLISION"


class NotFoundError(SparseForgeError):
    code = "NOT_FOUND"
