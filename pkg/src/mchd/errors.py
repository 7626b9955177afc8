"""Exception hierarchy shared by the pipeline stages."""


class MCHDError(Exception):
    """Base class for all package errors."""


class ConfigurationError(MCHDError, ValueError):
    """Invalid parameters or configuration file."""


class UsageError(MCHDError, ValueError):
    """An operation was called with arguments violating its contract."""


class IngestionError(MCHDError):
    """Unreadable or inconsistent input data."""


class TrainingError(MCHDError):
    """Training data cannot produce a valid model."""
