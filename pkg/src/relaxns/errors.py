"""Exception types shared across the package."""


class DomainError(ValueError):
    """An operation was called with physically inadmissible arguments
    (nonpositive density/temperature, negative energy residual, ...)."""


class BreakdownError(RuntimeError):
    """The evolved state left the admissible set (positivity loss,
    non-invertible energy).  This is a scientific result, not a bug."""


class ConfigError(ValueError):
    """Invalid run configuration (bad key, out-of-range value, ...)."""
