"""Exception hierarchy shared by all phxmem modules.

Each class carries the CLI exit code it maps to: 2 for configuration
problems, 3 for physics/solver failures.
"""


class PhxmemError(Exception):
    exit_code = 1


class ConfigurationError(PhxmemError, ValueError):
    exit_code = 2


class DomainError(PhxmemError, ValueError):
    """An argument lies outside its mathematical domain."""

    exit_code = 2


class RangeError(DomainError):
    """A wavelength query falls outside a material table."""


class PhysicsError(PhxmemError):
    exit_code = 3


class SolverError(PhysicsError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NoGuidedModeError(SolverError):
    pass


class CapacityError(PhysicsError):
    """Requested level or bit count exceeds what the cell contrast supports."""


class ThresholdError(PhysicsError):
    """A set operation cannot complete at the requested heater power."""

    def __init__(self, message, mechanism):
        super().__init__(message)
        self.mechanism = mechanism
