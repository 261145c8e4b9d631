"""Exception types shared across the package."""


class ZonesimError(Exception):
    """Base class for all errors raised by this package."""


class InvalidConfigError(ZonesimError):
    """A configuration value is missing, malformed, or physically impossible."""


class AssemblyError(ZonesimError):
    """The thermal network cannot be assembled from the given parameters."""


class SolverError(ZonesimError):
    """The network equations cannot be solved (singular or disconnected system)."""


class WeatherFormatError(ZonesimError):
    """A weather file does not follow the expected format."""


class ProfileFormatError(ZonesimError):
    """A usage-profile file does not follow the expected format."""


class UnknownColumnError(ZonesimError):
    """An output column name is not part of the published column set."""


class BatchRunError(ZonesimError):
    """A simulation run inside a batch failed; carries the run label."""

    def __init__(self, label: str, message: str):
        super().__init__(f"run '{label}': {message}")
        self.label = label
