"""Exception hierarchy shared across the package."""

from __future__ import annotations


class SpciError(Exception):
    """Base class for all errors raised by this package."""


class InsufficientDataError(SpciError, ValueError):
    """Too few observations (rows, residuals, training points) for the request."""


class ShapeError(SpciError, ValueError):
    """Array dimensions do not agree."""


class DomainError(SpciError, ValueError):
    """A probability or parameter lies outside its admissible range."""


class EmptyInputError(SpciError, ValueError):
    """An operation that needs at least one value received none."""


class NonpositiveScaleError(SpciError, ValueError):
    """A scale estimate used for residual normalization was not strictly positive."""


class DataLoadError(SpciError, ValueError):
    """A CSV file could not be ingested (missing column, bad numeric, missing value)."""


class LeakageError(SpciError, AssertionError):
    """A quantity feeding the interval at time t depended on data at index >= t."""
