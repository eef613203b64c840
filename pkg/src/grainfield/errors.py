"""Exception hierarchy shared by all grainfield modules."""


class GrainfieldError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(GrainfieldError):
    """Invalid argument values (bad ranges, mismatched rates, ...)."""


class ScheduleError(ParameterError):
    """A grain schedule references targets that cannot be resolved."""


class FormatError(GrainfieldError):
    """A file is structurally malformed (bad chunk, unsupported codec)."""


class DataError(GrainfieldError):
    """Input data is missing or inconsistent (manifests, rating tables)."""


class StatisticsError(GrainfieldError):
    """A statistical routine cannot produce a valid result."""
