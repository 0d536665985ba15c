"""Position-independent half-order Dirac pair.

The coupled equations

    sqrt(2 m i hbar) D^{1/2} psi+ = P+ psi-
    sqrt(2 m i hbar) D^{1/2} psi- = P- psi+

(``D^{1/2}`` the Caputo derivative) are solved in closed form by

    psi+ = A E(c sqrt t) + B E(-c sqrt t)
    psi- = r [A E(c sqrt t) - B E(-c sqrt t)]

with ``E = E_{1/2}``, ``c = sqrt(K0 / (i hbar))``, ``K0 = P+ P- / 2m`` and
``r = sqrt(2 m i hbar) c / P+``.  All roots are principal; ``1/i = -i``.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import specfun
from .model import DEFAULT_SCALES, PhysicalScales


class TimeDirection(enum.Enum):
    FORWARD = "F"
    NONE = "0"
    BACKWARD = "B"


@dataclass(frozen=True)
class SeparationConstants:
    pt_plus: complex
    pt_minus: complex
    mass: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "pt_plus", complex(self.pt_plus))
        object.__setattr__(self, "pt_minus", complex(self.pt_minus))
        if not self.mass > 0:
            raise ValueError("mass must be positive")

    def k0(self) -> complex:
        return self.pt_plus * self.pt_minus / (2.0 * self.mass)

    def swapped(self) -> "SeparationConstants":
        return SeparationConstants(self.pt_minus, self.pt_plus, self.mass)

    def as_dict(self) -> dict:
        k = self.k0()
        return {
            "pt_plus": [self.pt_plus.real, self.pt_plus.imag],
            "pt_minus": [self.pt_minus.real, self.pt_minus.imag],
            "mass": self.mass,
            "k0": [k.real, k.imag],
        }


def constants_from_k0(k0: float, mass: float = 1.0) -> SeparationConstants:
    """Default factorisation of a real ``K0``.

    ``K0 > 0``: ``P+ = P- = sqrt(2 m K0)``; ``K0 < 0``: ``P+ = P- = i sqrt(2 m |K0|)``;
    ``K0 = 0``: both zero.
    """
    k0 = float(k0)
    if not math.isfinite(k0):
        raise ValueError("k0 must be finite")
    if k0 == 0:
        return SeparationConstants(0j, 0j, mass)
    p = math.sqrt(2.0 * mass * abs(k0))
    p = complex(p) if k0 > 0 else 1j * p
    return SeparationConstants(p, p, mass)


def classify_time_direction(constants: SeparationConstants, tol: float = 0.0) -> TimeDirection:
    """F for ``K0 > 0``, 0 (no evolution) for ``K0 = 0``, B for ``K0 < 0``.

    ``K0`` must be real up to ``tol`` (relative).
    """
    k = constants.k0()
    if abs(k.imag) > tol * abs(k) and k.imag != 0:
        raise ValueError(f"K0 = {k} is not real; time direction undefined")
    if k.real > 0:
        return TimeDirection.FORWARD
    if k.real < 0:
        return TimeDirection.BACKWARD
    return TimeDirection.NONE


def _root_2mih(mass: float, hbar: float) -> complex:
    return cmath.sqrt(2j * mass * hbar)


@dataclass(frozen=True)
class PidePair:
    a0: complex
    b0: complex
    constants: SeparationConstants
    psi0_plus: complex
    psi0_minus: complex
    scales: PhysicalScales = DEFAULT_SCALES

    @property
    def degenerate(self) -> bool:
        return self.constants.pt_plus == 0 or self.constants.pt_minus == 0

    def ratio(self) -> complex:
        """Component ratio ``r`` of ``psi-`` to the ``psi+`` combination."""
        c = self.constants
        if c.pt_plus == 0:
            raise ZeroDivisionError("ratio undefined for P+ = 0")
        return _root_2mih(c.mass, self.scales.hbar) * _c_factor(c, self.scales.hbar) / c.pt_plus

    @classmethod
    def from_initial(
        cls,
        constants: SeparationConstants,
        psi0_plus: complex = 1.0,
        psi0_minus: complex = 1.0,
        scales: PhysicalScales = DEFAULT_SCALES,
    ) -> "PidePair":
        _check_mass(constants, scales)
        p, m = complex(psi0_plus), complex(psi0_minus)
        if constants.pt_plus == 0 or constants.pt_minus == 0:
            return cls(math.nan, math.nan, constants, p, m, scales)
        tmp = cls(0j, 0j, constants, p, m, scales)
        r = tmp.ratio()
        return cls(0.5 * (p + m / r), 0.5 * (p - m / r), constants, p, m, scales)

    @classmethod
    def from_coefficients(
        cls,
        constants: SeparationConstants,
        a0: complex,
        b0: complex,
        scales: PhysicalScales = DEFAULT_SCALES,
    ) -> "PidePair":
        _check_mass(constants, scales)
        if constants.pt_plus == 0 or constants.pt_minus == 0:
            raise ValueError("coefficients are undefined when P+ or P- vanishes")
        a0, b0 = complex(a0), complex(b0)
        tmp = cls(a0, b0, constants, 0j, 0j, scales)
        r = tmp.ratio()
        return cls(a0, b0, constants, a0 + b0, r * (a0 - b0), scales)


def _check_mass(constants: SeparationConstants, scales: PhysicalScales) -> None:
    if constants.mass != scales.mass:
        raise ValueError("constants.mass and scales.mass disagree")


def _c_factor(constants: SeparationConstants, hbar: float) -> complex:
    return cmath.sqrt(-1j * constants.k0() / hbar)


def psi_pair(pair: PidePair, t, policy: specfun.MlEvalPolicy = specfun.DEFAULT_POLICY):
    """``(psi+(t), psi-(t))`` for scalar or array ``t >= 0``."""
    ta = np.asarray(t, dtype=float)
    if np.any(ta < 0):
        raise ValueError("t must be non-negative")
    c = pair.constants
    hbar = pair.scales.hbar
    if c.pt_plus == 0 and c.pt_minus == 0:
        plus = np.full(ta.shape, pair.psi0_plus, dtype=complex)
        minus = np.full(ta.shape, pair.psi0_minus, dtype=complex)
        return plus[()], minus[()]
    if pair.degenerate:
        # one constant vanishes: that channel is frozen and the other grows
        # like sqrt(t), since D^{1/2} sqrt(t) = Gamma(3/2)
        grow = np.sqrt(ta) / (_root_2mih(c.mass, hbar) * math.gamma(1.5))
        if c.pt_plus == 0:
            plus = np.full(ta.shape, pair.psi0_plus, dtype=complex)
            minus = pair.psi0_minus + c.pt_minus * pair.psi0_plus * grow
        else:
            minus = np.full(ta.shape, pair.psi0_minus, dtype=complex)
            plus = pair.psi0_plus + c.pt_plus * pair.psi0_minus * grow
        return np.asarray(plus)[()], np.asarray(minus)[()]
    # sqrt(K0 t / (i hbar)) with the product K0 t formed first
    y = np.sqrt(-1j * (c.k0() * ta) / hbar)
    e_up = specfun.mittag_leffler(0.5, y, policy)
    e_dn = specfun.mittag_leffler(0.5, -y, policy)
    r = pair.ratio()
    plus = pair.a0 * e_up + pair.b0 * e_dn
    minus = r * (pair.a0 * e_up - pair.b0 * e_dn)
    return np.asarray(plus)[()], np.asarray(minus)[()]


def pide_residual(pair: PidePair, t_grid, t_min: float = 0.0, min_points: int = 1000) -> tuple[float, float]:
    """Relative sup-norm residuals of the two half-order equations.

    ``D^{1/2}`` comes from :func:`specfun.caputo_half` on the sampled
    solution; the sup is taken over ``t >= t_min`` and divided by
    ``sup |P+- psi-+|`` there (absolute when that vanishes).
    """
    t = np.asarray(t_grid, dtype=float)
    if len(t) < min_points:
        raise ValueError(f"t_grid too coarse: need >= {min_points} points, got {len(t)}")
    plus, minus = psi_pair(pair, t)
    plus = np.broadcast_to(plus, t.shape)
    minus = np.broadcast_to(minus, t.shape)
    k = _root_2mih(pair.constants.mass, pair.scales.hbar)
    d_plus = specfun.caputo_half(specfun.CaputoGrid(t, plus))
    d_minus = specfun.caputo_half(specfun.CaputoGrid(t, minus))
    mask = t >= t_min
    out = []
    for d, p, other in ((d_plus, pair.constants.pt_plus, minus), (d_minus, pair.constants.pt_minus, plus)):
        rhs = p * other[mask]
        res = np.max(np.abs(k * d[mask] - rhs))
        ref = np.max(np.abs(rhs))
        out.append(float(res / ref) if ref > 0 else float(res))
    return out[0], out[1]


# ---------------------------------------------------------------------------
# Dirac factorisation


def _alpha() -> np.ndarray:
    return np.array([[0, 1], [1, 0]], dtype=complex)


def _beta() -> np.ndarray:
    return np.array([[-1j, 0], [0, 1j]], dtype=complex)


@dataclass(frozen=True)
class DiracMatrices:
    alpha: np.ndarray = field(default_factory=_alpha)
    beta: np.ndarray = field(default_factory=_beta)

    def identities(self) -> dict[str, float]:
        """Max entry deviations of ``a^2 = I``, ``b^2 = -I``, ``ab + ba = 0``."""
        eye = np.eye(2)
        a, b = self.alpha, self.beta
        return {
            "alpha_squared": float(np.max(np.abs(a @ a - eye))),
            "beta_squared": float(np.max(np.abs(b @ b + eye))),
            "anticommutator": float(np.max(np.abs(a @ b + b @ a))),
        }


def factorization_deviation(a: complex, b: complex, mats: DiracMatrices | None = None) -> float:
    """``max |(a alpha - b beta)^2 - (a^2 - b^2) I|``."""
    mats = mats or DiracMatrices()
    m = a * mats.alpha - b * mats.beta
    return float(np.max(np.abs(m @ m - (a * a - b * b) * np.eye(2))))


def dirac_factorization_check(samples: int = 20, seed: int = 0, tol: float = 1e-12) -> bool:
    """Check ``(a alpha - b beta)^2 = (a^2 - b^2) I`` on random complex pairs.

    Coefficients are drawn from the unit disc so the tolerance is absolute.
    """
    rng = np.random.default_rng(seed)
    mats = DiracMatrices()
    if max(mats.identities().values()) != 0.0:
        return False
    for _ in range(samples):
        a, b = (rng.uniform(-1, 1) + 1j * rng.uniform(-1, 1) for _ in range(2))
        if factorization_deviation(a, b, mats) > tol:
            return False
    return True


def fig2_series(k0_over_hbar, t_grid) -> dict[float, np.ndarray]:
    """``|psi+(t)|^2`` with ``A0 = 1, B0 = 0`` for each ``K0/hbar``."""
    out = {}
    for k in k0_over_hbar:
        pair = PidePair.from_coefficients(constants_from_k0(k), 1.0, 0.0)
        plus, _ = psi_pair(pair, t_grid)
        out[float(k)] = np.abs(plus) ** 2
    return out
