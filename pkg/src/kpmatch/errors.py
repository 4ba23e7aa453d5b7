"""Exception hierarchy shared across the toolkit.

ConfigError maps to CLI exit code 1, DataError to exit code 2.
"""


class KpmatchError(Exception):
    """Base class for toolkit errors."""


class ConfigError(KpmatchError):
    """Invalid or inconsistent run configuration."""


class DataError(KpmatchError):
    """Malformed, missing, or contradictory input data."""
