"""Momentumian mechanics: classical time of flight, half-order Dirac pairs and their solvers."""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    DEFAULT_SCALES,
    Branch,
    ConstantForce,
    Coulomb1D,
    DomainError,
    Free,
    Harmonic,
    InvertedHarmonic,
    PhysicalScales,
    SingularShiftError,
    potential_from_dict,
    potential_to_dict,
)

__all__ = [
    "__version__",
    "DEFAULT_SCALES",
    "Branch",
    "ConstantForce",
    "Coulomb1D",
    "DomainError",
    "Free",
    "Harmonic",
    "InvertedHarmonic",
    "PhysicalScales",
    "SingularShiftError",
    "potential_from_dict",
    "potential_to_dict",
]
