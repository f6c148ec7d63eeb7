"""Exception hierarchy shared across the package.

Validation failures (bad values, bad shapes, degenerate inputs) and file
format failures are kept distinct so the CLI can map them to different
exit codes: validation problems exit 1, I/O and format problems exit 2.
"""

__all__ = [
    "SpateganError",
    "ValidationError",
    "ShapeError",
    "DegenerateGridError",
    "DegenerateTotalError",
    "NumericalError",
    "FormatError",
    "PayloadLengthError",
]


class SpateganError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(SpateganError):
    """Input values violate a documented precondition."""


class ShapeError(ValidationError):
    """Array dimensions do not match the documented contract."""


class DegenerateGridError(ValidationError):
    """Grid too small to carry a neighbourhood structure (fewer than 2 pixels)."""


class DegenerateTotalError(ValidationError):
    """A normalising sum is too close to zero for the expectation to be defined."""


class NumericalError(SpateganError):
    """A computation produced non-finite intermediates despite valid inputs."""


class FormatError(SpateganError):
    """A file does not conform to the expected on-disk layout."""


class PayloadLengthError(FormatError):
    """Header-declared payload size disagrees with the actual byte count."""
