"""
Exception hierarchy for the spectral toolkit.

Every error raised by the numerical modules derives from SpectralError and
carries the process exit code the command line reports for it.
"""

from typing import Optional


class SpectralError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 3

    def __init__(self, message: str, detail: Optional[dict] = None):
        super().__init__(message)
        self.detail = detail or {}


class UsageError(SpectralError):
    """Invalid flags, tokens or configuration keys."""

    exit_code = 1


# Numeric errors

class OverflowGuardError(SpectralError):
    """|Re(lambda) * h| exceeds the exponential overflow guard."""


class NonFiniteError(SpectralError):
    """A NaN or infinite input reached a solver."""


class DomainError(SpectralError):
    """An argument lies outside the domain of an operation."""


class BoundaryTooCloseError(SpectralError):
    """A zero lies within the guard band of a contour."""


class SubdivisionLimitError(SpectralError):
    """Subdivision or Newton refinement could not isolate a simple root."""


class BranchCutError(SpectralError):
    """A sample point lies on the negative real axis."""


class NoBracketError(SpectralError):
    """The bracketing function has no sign change on its interval."""


class GridMismatchError(SpectralError):
    """The time step does not divide the delay."""


class NonFiniteHistoryError(SpectralError):
    """The initial history is not finite on [-h, 0]."""


class TooFewPeaksError(SpectralError):
    """The fit window holds too few envelope peaks."""


# Certification errors

class CertificationError(SpectralError):
    """A root could not be certified."""

    exit_code = 2


class MarginNonPositiveError(CertificationError):
    """The Rouche inequality fails on every admissible certification disk."""


class WindingMismatchError(CertificationError):
    """The certification disk does not hold exactly one zero."""
