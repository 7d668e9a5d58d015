"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: ConfigError -> 1, DataError -> 2,
EstimationError -> 3.
"""


class ToolkitError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(ToolkitError):
    """Invalid configuration: bad parameter values, unknown keys, bad flags."""


class DataError(ToolkitError):
    """Input data violates a required contract (schema, empty wave, ...)."""


class SchemaError(DataError):
    """A mapped column is missing from an input file."""


class AgeRangeError(DataError):
    """An age falls outside the range covered by an age profile."""


class EstimationError(ToolkitError):
    """A calibration step cannot produce an estimate from the given data."""
