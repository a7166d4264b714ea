"""Exception hierarchy shared by every module."""


class GiniDebiasError(Exception):
    """Base class for all package errors."""


class ConfigError(GiniDebiasError, ValueError):
    """Invalid configuration value or combination of options."""


class DataFormatError(GiniDebiasError, ValueError):
    """Input file or array does not conform to the expected layout.

    ``row`` is the 1-based data row (header excluded) when the fault can be
    pinned to one line, otherwise ``None``.
    """

    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class MalformedRowError(DataFormatError):
    pass


class InconsistentClassCountError(DataFormatError):
    pass


class NegativeProbabilityError(DataFormatError):
    pass


class LabelOutOfRangeError(DataFormatError):
    pass


class ZeroProbabilityRowError(DataFormatError):
    pass


class InfeasibleError(GiniDebiasError, ValueError):
    """The requested computation cannot be carried out on this data."""


class UnsupportedClassError(InfeasibleError):
    """A class has no instances, so its accuracy is not estimable."""


class SearchBudgetError(InfeasibleError):
    """Exhaustive enumeration would exceed the configured budget."""
