"""Exception types raised by the gpde package."""


class GpdeError(Exception):
    """Base class for all package-specific errors."""


class InvalidInputError(GpdeError, ValueError):
    """Malformed or inconsistent caller input (shapes, domains, values)."""


class DataLoadError(InvalidInputError):
    """A dataset file could not be parsed or failed validation."""


class NumericalError(GpdeError, RuntimeError):
    """A numerical routine failed beyond recovery (e.g. Cholesky after max jitter)."""


class UndefinedMetricError(GpdeError, ValueError):
    """A metric is undefined for the given inputs (e.g. AUC with one class)."""


class ConfigError(GpdeError, ValueError):
    """A benchmark or generator configuration is invalid."""
