"""Exception types shared across the package.

Every error raised by the library is a subclass of FsotError so callers
(notably the CLI) can distinguish usage problems from runtime failures.
"""


class FsotError(Exception):
    """Base class for all library errors."""


class InvalidArgumentError(FsotError, ValueError):
    """An argument violates a documented precondition."""


class EmptySelectionError(FsotError):
    """A threshold draw selected no points; the caller should resample."""


class InvalidProjectionError(FsotError):
    """All projected target mass landed on a single value; resample the axis."""


class ConfigDegenerateError(FsotError):
    """A class configuration wastes most threshold draws on empty selections."""


class UnsupportedDimensionError(FsotError):
    """The operation is only defined for a specific dimensionality."""


class EqualMassViolationError(FsotError):
    """The equal-mass hypothesis of the filtered error bound does not hold."""
