"""Physical scales, potentials and branch conventions.

Everything here is immutable and pure.  Potentials accept scalars or numpy
arrays; the solver hot loops use :func:`coupling_function`, which returns a
plain-Python scalar closure.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import asdict, dataclass
from typing import Any, Callable, Union

import numpy as np


class DomainError(ValueError):
    """Raised when a potential is evaluated outside its admitted domain."""


class SingularShiftError(ValueError):
    """Raised when the force-form potential shift divides by a zero momentum."""


@dataclass(frozen=True)
class PhysicalScales:
    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self) -> None:
        if not (self.hbar > 0 and self.mass > 0):
            raise ValueError("hbar and mass must be positive")


DEFAULT_SCALES = PhysicalScales()


class Branch(enum.Enum):
    """Sign of the Momentumian.

    ``PLUS`` has negative time velocity (space and time run opposite ways),
    ``MINUS`` has positive time velocity.
    """

    PLUS = "plus"
    MINUS = "minus"

    @property
    def sign(self) -> int:
        return 1 if self is Branch.PLUS else -1

    def swap(self) -> "Branch":
        return Branch.MINUS if self is Branch.PLUS else Branch.PLUS

    @classmethod
    def parse(cls, value: "str | Branch") -> "Branch":
        if isinstance(value, Branch):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"branch must be 'plus' or 'minus', got {value!r}") from None


# ---------------------------------------------------------------------------
# potentials


@dataclass(frozen=True)
class Free:
    type = "free"

    def value(self, q, mass):
        return np.zeros_like(np.asarray(q, dtype=float))[()]

    def force(self, q, mass):
        return np.zeros_like(np.asarray(q, dtype=float))[()]


@dataclass(frozen=True)
class ConstantForce:
    """Linear potential ``V = -f0 (q - q0)`` with constant force ``f0``."""

    f0: float
    q0: float = 0.0
    type = "constant_force"

    def value(self, q, mass):
        return -self.f0 * (np.asarray(q, dtype=float) - self.q0)[()]

    def force(self, q, mass):
        return np.full_like(np.asarray(q, dtype=float), self.f0)[()]


@dataclass(frozen=True)
class Harmonic:
    omega: float = 1.0
    type = "harmonic"

    def __post_init__(self) -> None:
        if not self.omega > 0:
            raise ValueError("omega must be positive")

    def value(self, q, mass):
        q = np.asarray(q, dtype=float)
        return (0.5 * mass * self.omega**2 * q * q)[()]

    def force(self, q, mass):
        return (-mass * self.omega**2 * np.asarray(q, dtype=float))[()]


@dataclass(frozen=True)
class InvertedHarmonic:
    omega: float = 1.0
    type = "inverted_harmonic"

    def __post_init__(self) -> None:
        if not self.omega > 0:
            raise ValueError("omega must be positive")

    def value(self, q, mass):
        q = np.asarray(q, dtype=float)
        return (-0.5 * mass * self.omega**2 * q * q)[()]

    def force(self, q, mass):
        return (mass * self.omega**2 * np.asarray(q, dtype=float))[()]


@dataclass(frozen=True)
class Coulomb1D:
    """``V = -e2/|q|``, admitted only for ``|q| >= epsilon``."""

    e2: float = 1.0
    epsilon: float = 1e-3
    type = "coulomb1d"

    def __post_init__(self) -> None:
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")

    def _check(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if np.any(np.abs(q) < self.epsilon):
            raise DomainError(
                f"Coulomb1D admits |q| >= epsilon={self.epsilon:g} only"
            )
        return q

    def value(self, q, mass):
        q = self._check(q)
        return (-self.e2 / np.abs(q))[()]

    def force(self, q, mass):
        q = self._check(q)
        return (-self.e2 * np.sign(q) / (q * q))[()]


Potential = Union[Free, ConstantForce, Harmonic, InvertedHarmonic, Coulomb1D]

_POTENTIAL_TYPES: dict[str, type] = {
    "free": Free,
    "constant_force": ConstantForce,
    "harmonic": Harmonic,
    "inverted_harmonic": InvertedHarmonic,
    "coulomb1d": Coulomb1D,
}
_ALIASES = {"constantforce": "constant_force", "invertedharmonic": "inverted_harmonic", "coulomb": "coulomb1d"}


def potential_from_dict(data: dict[str, Any]) -> Potential:
    """Build a potential from ``{"type": "harmonic", "omega": 1.0}``-style JSON."""
    data = dict(data)
    kind = str(data.pop("type", "")).lower().replace("-", "_")
    kind = _ALIASES.get(kind, kind)
    cls = _POTENTIAL_TYPES.get(kind)
    if cls is None:
        raise ValueError(
            f"unknown potential type {kind!r}; expected one of {sorted(_POTENTIAL_TYPES)}"
        )
    try:
        return cls(**{k: float(v) for k, v in data.items()})
    except TypeError as exc:
        raise ValueError(f"bad fields for potential {kind!r}: {exc}") from None


def potential_to_dict(pot: Potential) -> dict[str, Any]:
    return {"type": pot.type, **asdict(pot)}


# ---------------------------------------------------------------------------
# evaluation


def evaluate_potential(pot: Potential, q, scales: PhysicalScales = DEFAULT_SCALES):
    return pot.value(q, scales.mass)


def evaluate_force(pot: Potential, q, scales: PhysicalScales = DEFAULT_SCALES):
    """Analytic force ``-dV/dq``."""
    return pot.force(q, scales.mass)


def characteristic_momentum(pot: Potential, scales: PhysicalScales, q):
    """Principal-branch ``sqrt(2 m V(q))``; purely imaginary where ``V < 0``."""
    v = np.asarray(evaluate_potential(pot, q, scales), dtype=complex)
    return np.sqrt(2.0 * scales.mass * v)[()]


def coupling_momentum(pot: Potential, scales: PhysicalScales, q):
    """Square root of ``2 m V`` continued analytically along the real axis.

    This is the momentum that enters the first-order coupled equations.  It
    squares to ``2 m V`` like :func:`characteristic_momentum`, but for the
    harmonic family the sign follows ``q`` (``m omega q``) so the decoupled
    solutions are Gaussians on both sides of the origin.  Other potentials
    use the principal branch.
    """
    m = scales.mass
    if isinstance(pot, Harmonic):
        return (m * pot.omega * np.asarray(q, dtype=float) + 0j)[()]
    if isinstance(pot, InvertedHarmonic):
        return (1j * m * pot.omega * np.asarray(q, dtype=float))[()]
    return characteristic_momentum(pot, scales, q)


def coupling_derivative(pot: Potential, scales: PhysicalScales, q):
    """``d/dq`` of :func:`coupling_momentum`, in closed form per variant."""
    m = scales.mass
    q = np.asarray(q, dtype=float)
    if isinstance(pot, Free):
        return np.zeros_like(q, dtype=complex)[()]
    if isinstance(pot, Harmonic):
        return np.full_like(q, m * pot.omega, dtype=complex)[()]
    if isinstance(pot, InvertedHarmonic):
        return np.full_like(q, 1j * m * pot.omega, dtype=complex)[()]
    s = np.asarray(coupling_momentum(pot, scales, q), dtype=complex)
    f = np.asarray(evaluate_force(pot, q, scales), dtype=float)
    if np.any((s == 0) & (f != 0)):
        raise SingularShiftError("coupling momentum vanishes where the force does not")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(s == 0, 0j, -m * f / np.where(s == 0, 1, s))
    return out[()]


def coupling_function(pot: Potential, scales: PhysicalScales) -> Callable[[complex], complex]:
    """Scalar closure ``q -> coupling_momentum(q)`` for integrator inner loops.

    Accepts complex ``q`` for the harmonic family (used by the ``q -> i q``
    rotation).
    """
    m = scales.mass
    if isinstance(pot, Free):
        return lambda q: 0j
    if isinstance(pot, Harmonic):
        c = m * pot.omega
        return lambda q: c * q + 0j
    if isinstance(pot, InvertedHarmonic):
        c = 1j * m * pot.omega
        return lambda q: c * q
    if isinstance(pot, ConstantForce):
        f0, q0 = pot.f0, pot.q0
        return lambda q: cmath.sqrt(-2.0 * m * f0 * (q - q0))
    if isinstance(pot, Coulomb1D):
        c = 2.0 * m * pot.e2
        eps = pot.epsilon

        def coulomb(q: complex) -> complex:
            aq = abs(q)
            if aq < eps:
                raise DomainError(f"Coulomb1D admits |q| >= epsilon={eps:g} only")
            return 1j * math.sqrt(c / aq)

        return coulomb
    raise TypeError(f"unsupported potential {pot!r}")
