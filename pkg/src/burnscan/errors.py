"""Exception hierarchy.

Three families map onto the CLI exit codes: ConfigError -> 2,
DataError -> 3, NumericalError -> 4.
"""


class BurnscanError(Exception):
    """Base class for all burnscan errors."""


class ConfigError(BurnscanError):
    """Invalid configuration value or malformed config document."""


class DataError(BurnscanError):
    """Input data violates a precondition (grids, bands, formats)."""


class MissingBandError(DataError):
    """A required band role is absent from a scene or stats object."""


class GridMismatchError(DataError):
    """Two rasters that must share a grid do not."""


class FormatError(DataError):
    """A serialized artifact is malformed (magic, schema, truncation)."""


class NumericalError(BurnscanError):
    """A computation produced non-finite or degenerate values."""
