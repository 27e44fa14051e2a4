"""Exception hierarchy shared by all qfolio modules.

The CLI maps these onto exit codes: configuration problems exit 1, data
problems exit 2, broken internal invariants exit 3.
"""


class QfolioError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(QfolioError):
    """Invalid engine configuration (bad key, bad value, bad range)."""


class DataError(QfolioError):
    """Problem with input data or artifacts derived from it."""


class MalformedInputError(DataError):
    """Input file could not be parsed."""


class ValidationError(DataError):
    """Values violate a documented invariant (non-positive price, duplicate cell, ...)."""


class InsufficientDataError(DataError):
    """Not enough history to perform the requested computation."""


class EmptyUniverseError(DataError):
    """No ticker has full coverage for the requested window."""


class InfeasibleError(DataError):
    """The operation cannot be performed on this instance (e.g. fewer points than clusters)."""


class EncodingDomainError(ValidationError):
    """Quantum encoding input outside the open interval (-1, 1)."""


class IncompatibleCheckpointError(DataError):
    """Checkpoint was produced under a structurally different configuration."""


class InvariantError(QfolioError):
    """An internal self-check failed; indicates a bug, not bad input."""
