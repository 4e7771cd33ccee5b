"""Exception types shared across the package."""


class DataError(Exception):
    """Raised for unreadable, malformed or inconsistent input data."""


class SchemaError(DataError):
    """Raised when a schema is invalid or the data contradicts it."""


class EmptyGroupError(DataError):
    """Raised when one of the four protected/class sub-groups is empty."""


class UndefinedMetricError(ValueError):
    """Raised when a rate has a zero denominator (e.g. a group without positives)."""
