"""Exception hierarchy shared by all lcprune modules."""


class LcpruneError(Exception):
    """Base class for all lcprune errors."""


class UsageError(LcpruneError):
    """Bad arguments / flag combinations (CLI exit code 2)."""


class DataValidationError(LcpruneError):
    """A file or matrix violates a format invariant (CLI exit code 3)."""


class NumericalError(LcpruneError):
    """A numerical precondition is violated (CLI exit code 4)."""
