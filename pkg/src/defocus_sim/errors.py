"""Exception types shared across the package."""


class DomainError(ValueError):
    """An input is outside the physical domain of the optical model
    (e.g. a focus depth at or inside the focal length)."""


class ConfigError(ValueError):
    """A required optional parameter is missing from a lens description."""


class InfeasibleGridError(RuntimeError):
    """Every cell of a search grid is infeasible."""


class DatasetError(RuntimeError):
    """A dataset directory is missing files or fails validation."""
