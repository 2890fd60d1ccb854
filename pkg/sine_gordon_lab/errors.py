"""Exception hierarchy for the sine-Gordon lab.

Every exception carries the exit code the command-line interface maps it to:

    2  configuration error (bad field, missing field, unknown subcommand)
    3  numerical or precondition failure raised by a library operation
    4  statistical acceptance test failed in a ``*-check`` style experiment

Library code raises the most specific subclass available so callers can react
to, for example, an under-resolved grid separately from a shape mismatch.
"""

from typing import Optional


class SineGordonLabError(Exception):
    """Base class of all errors raised by this package."""

    exit_code = 3


class ConfigError(SineGordonLabError):
    """Invalid experiment configuration.

    Args:
        message: Human readable description.
        field: Dotted key path of the offending field, e.g. ``grid.n_side``.
    """

    exit_code = 2

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        if field:
            message = f"{field}: {message}"
        super().__init__(message)


class NumericalError(SineGordonLabError):
    """A library operation could not produce a trustworthy result."""

    exit_code = 3


class ShapeError(NumericalError, ValueError):
    """Array shape does not match the grid it is attached to."""


class GridMismatchError(NumericalError):
    """Two objects that must share a grid do not."""


class ResolutionError(NumericalError):
    """The grid cannot represent the requested cutoff (needs 2N <= Nyquist)."""


class ParameterError(NumericalError, ValueError):
    """A numerical parameter lies outside its admissible range."""


class RegimeError(NumericalError):
    """The coupling beta^2 lies outside the regime of the requested operation."""


class ProvenanceError(NumericalError):
    """A derived quantity does not match the inputs it claims to come from."""


class PreconditionError(NumericalError, ValueError):
    """An input violates a documented precondition (decay, support, ...)."""


class TruncationError(NumericalError):
    """A weighted norm's shell truncation does not cover the field's support."""


class RenormOverflowError(NumericalError):
    """The renormalisation constant exceeds the representable range."""


class ScanError(NumericalError):
    """A parameter scan is inconsistent (resolution drift, empty parameter list)."""


class StatisticalTestFailure(SineGordonLabError):
    """A statistical acceptance check rejected its null hypothesis."""

    exit_code = 4
