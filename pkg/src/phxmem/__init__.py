"""Design-space exploration for phase-change-material photonic memory cells and arrays."""

from .errors import (
    CapacityError,
    ConfigurationError,
    DomainError,
    PhxmemError,
    PhysicsError,
    RangeError,
    SolverError,
    ThresholdError,
)

__all__ = [
    "CapacityError",
    "ConfigurationError",
    "DomainError",
    "PhxmemError",
    "PhysicsError",
    "RangeError",
    "SolverError",
    "ThresholdError",
]

__version__ = "0.1.0"
