"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3.
"""


class UpliftRankError(Exception):
    """Base class for all package errors."""


class ConfigError(UpliftRankError):
    """Invalid configuration value or combination."""


class DataError(UpliftRankError):
    """Malformed or inconsistent input data."""


class IngestionError(DataError):
    """CSV ingestion failure; message names the offending row."""


class ShapeError(DataError):
    """Array length or dimensionality mismatch."""


class DegenerateGroupError(DataError):
    """An operation required a non-empty treatment and control group."""


class DegenerateLabelError(DataError):
    """A classifier target collapsed to a single class."""


class UnsupportedSpecError(UpliftRankError):
    """Requested value-function combination does not exist."""


class MetricDomainError(UpliftRankError):
    """Metric applied outside its domain (e.g. MAP on graded relevance)."""
