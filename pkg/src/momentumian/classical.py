"""Classical dynamics with position as the independent variable.

The trajectory is ``t(q)``.  With ``H0`` conserved along ``q`` the Momentumian
``P(q) = +-sqrt(2 m (H0 - V(q)))`` fixes the time velocity
``t'(q) = -+ m / sqrt(2 m (H0 - V(q)))``, and the time of flight between two
positions is a one-dimensional integral with square-root singularities at
turning points.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .model import (
    DEFAULT_SCALES,
    Branch,
    ConstantForce,
    Coulomb1D,
    DomainError,
    Free,
    Harmonic,
    InvertedHarmonic,
    PhysicalScales,
    Potential,
    evaluate_force,
    evaluate_potential,
)


class TurningPointError(ArithmeticError):
    """The time velocity diverges at a turning point."""


@dataclass(frozen=True)
class ClassicalSetup:
    potential: Potential
    scales: PhysicalScales = DEFAULT_SCALES
    h0: float = 0.5
    t0: complex = 0j
    branch: Branch = Branch.MINUS
    # reference position of the free-particle closed form
    q_ref: float = 0.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.h0):
            raise ValueError("h0 must be finite")
        object.__setattr__(self, "branch", Branch.parse(self.branch))
        object.__setattr__(self, "t0", complex(self.t0))


@dataclass(frozen=True)
class TimeTrajectory:
    q_grid: np.ndarray
    t_values: np.ndarray
    t_prime: np.ndarray
    setup: ClassicalSetup | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if not (len(self.q_grid) == len(self.t_values) == len(self.t_prime)):
            raise ValueError("q_grid, t_values and t_prime must have equal length")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["q", "re_t", "im_t", "re_tprime", "im_tprime"])
        for q, t, tp in zip(self.q_grid, self.t_values, self.t_prime):
            w.writerow([f"{v:.17g}" for v in (q, t.real, t.imag, tp.real, tp.imag)])
        return buf.getvalue()


def _kinetic(setup: ClassicalSetup, q):
    """``H0 - V(q)``."""
    return setup.h0 - evaluate_potential(setup.potential, q, setup.scales)


def _root_2mk(setup: ClassicalSetup, q):
    k = np.asarray(_kinetic(setup, q), dtype=complex)
    return np.sqrt(2.0 * setup.scales.mass * k)


def momentumian(setup: ClassicalSetup, q):
    """``+-sqrt(2 m (H0 - V))``, principal branch, sign from ``setup.branch``."""
    return (setup.branch.sign * _root_2mk(setup, q))[()]


def time_velocity(setup: ClassicalSetup, q):
    root = _root_2mk(setup, q)
    if np.any(root == 0):
        raise TurningPointError("time velocity diverges at turning point")
    return (-setup.branch.sign * setup.scales.mass / root)[()]


# ---------------------------------------------------------------------------
# turning points


def turning_points(setup: ClassicalSetup, q_range, cells: int = 1024, tol: float = 1e-12) -> list[float]:
    """Roots of ``H0 - V(q)`` in ``q_range`` by sign-change scan plus bisection."""
    lo, hi = float(q_range[0]), float(q_range[1])
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        raise ValueError("q_range must be a finite increasing interval")
    if cells < 1:
        raise ValueError("cells must be positive")
    pot = setup.potential

    def f(q):
        q = np.asarray(q, dtype=float)
        if isinstance(pot, Coulomb1D):
            ok = np.abs(q) >= pot.epsilon
            out = np.full(q.shape, np.nan)
            out[ok] = _kinetic(setup, q[ok])
            return out
        return np.asarray(_kinetic(setup, q), dtype=float)

    grid = np.linspace(lo, hi, cells + 1)
    vals = f(grid)
    roots: list[float] = []
    for i in range(cells + 1):
        if vals[i] == 0.0:
            roots.append(float(grid[i]))
    for i in range(cells):
        a, b = grid[i], grid[i + 1]
        fa, fb = vals[i], vals[i + 1]
        if not (np.isfinite(fa) and np.isfinite(fb)) or fa == 0.0 or fb == 0.0:
            continue
        if (fa < 0) == (fb < 0):
            continue
        while b - a > tol:
            m = 0.5 * (a + b)
            fm = float(f(np.array([m]))[0])
            if fm == 0.0:
                a = b = m
                break
            if (fm < 0) == (fa < 0):
                a, fa = m, fm
            else:
                b = m
        roots.append(float(0.5 * (a + b)))
    return sorted(roots)


# ---------------------------------------------------------------------------
# quadrature


@lru_cache(maxsize=8)
def _leggauss01(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=8)
def _graded_rule(n: int, levels: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss rule on [0, 1] with panels refined geometrically toward 0."""
    x, w = _leggauss01(n)
    edges = np.concatenate(([0.0], 0.5 ** np.arange(levels, -1, -1)))
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        nodes.append(a + (b - a) * x)
        weights.append((b - a) * w)
    return np.concatenate(nodes), np.concatenate(weights)


def _potential_increment(pot: Potential, e: float, d: np.ndarray, mass: float) -> np.ndarray:
    """``V(e + d) - V(e)`` without cancellation."""
    if isinstance(pot, Free):
        return np.zeros_like(d)
    if isinstance(pot, ConstantForce):
        return -pot.f0 * d
    if isinstance(pot, Harmonic):
        return 0.5 * mass * pot.omega**2 * (2.0 * e + d) * d
    if isinstance(pot, InvertedHarmonic):
        return -0.5 * mass * pot.omega**2 * (2.0 * e + d) * d
    return pot.value(e + d, mass) - pot.value(e, mass)


def _flight_integral(setup: ClassicalSetup, a: float, b: float, n: int, levels: int = 20) -> complex:
    """``int_a^b m / sqrt(2 m (H0 - V)) dq``.

    Each half of the interval is mapped with ``q = e + (mid - e) u**2`` from its
    outer endpoint ``e``, which turns an inverse-square-root endpoint
    singularity into an analytic integrand; the graded rule then also copes
    with turning points lying just outside the interval.  The kinetic term is
    formed as ``K(e) - [V(q) - V(e)]`` with ``K(e)`` snapped to zero when it is
    at rounding level, so a turning-point endpoint stays exactly singular.
    """
    if a == b:
        return 0j
    u, w = _graded_rule(n, levels)
    mid = 0.5 * (a + b)
    m = setup.scales.mass
    pot = setup.potential
    total = 0j
    for e, sgn in ((a, 1.0), (b, -1.0)):
        span = mid - e
        d = span * u * u
        v_e = float(evaluate_potential(pot, e, setup.scales))
        k_e = setup.h0 - v_e
        if abs(k_e) <= 64 * np.finfo(float).eps * (abs(setup.h0) + abs(v_e)):
            k_e = 0.0
        k = np.asarray(k_e - _potential_increment(pot, e, d, m), dtype=complex)
        g = m / np.sqrt(2.0 * m * k)
        total += sgn * np.sum(w * g * 2.0 * span * u)
    return complex(total)


def _check_path(setup: ClassicalSetup, a: float, b: float) -> None:
    lo, hi = min(a, b), max(a, b)
    pot = setup.potential
    if isinstance(pot, Coulomb1D) and lo < pot.epsilon and hi > -pot.epsilon:
        raise DomainError("path crosses the Coulomb regularization region")
    slack = 1e-9 * max(1.0, hi - lo)
    for r in turning_points(setup, (lo, hi)):
        if r - lo > slack and hi - r > slack:
            raise ValueError(
                f"interior turning point at q={r:.12g}; split the path there"
            )


def time_of_flight(setup: ClassicalSetup, q_start: float, q_end: float, n_steps: int = 16) -> complex:
    """``t(q_end) - t(q_start) = -+ int m / sqrt(2 m (H0 - V)) dq``.

    ``n_steps`` is the Gauss order per panel.  Turning points are allowed at
    the endpoints only.
    """
    if n_steps < 4:
        raise ValueError("n_steps must be >= 4")
    a, b = float(q_start), float(q_end)
    if a == b:
        return 0j
    _check_path(setup, a, b)
    return -setup.branch.sign * _flight_integral(setup, a, b, n_steps)


def analytic_time(setup: ClassicalSetup, q):
    """Closed-form ``t(q)`` for the free particle, constant force and HO.

    The constant of integration is fixed so that ``t = t0`` at ``q_ref`` (free),
    at the zero of the kinetic energy (constant force), and at ``q = A`` (HO).
    """
    pot, m, s = setup.potential, setup.scales.mass, setup.branch.sign
    h0 = setup.h0
    qa = np.asarray(q, dtype=float)
    if isinstance(pot, Free):
        out = setup.t0 - s * m * (qa - setup.q_ref) / np.sqrt(complex(2.0 * m * h0))
    elif isinstance(pot, ConstantForce):
        if pot.f0 == 0.0:
            out = setup.t0 - s * m * (qa - setup.q_ref) / np.sqrt(complex(2.0 * m * h0))
        else:
            shift = pot.f0 * (qa - pot.q0)
            kin = h0 + shift
            # rounding-level kinetic energy means q is the turning point
            kin = np.where(np.abs(kin) <= 64 * np.finfo(float).eps * (abs(h0) + np.abs(shift)), 0.0, kin)
            root = np.sqrt(np.asarray(2.0 * m * kin, dtype=complex))
            out = setup.t0 - s * root / pot.f0
    elif isinstance(pot, Harmonic):
        if h0 <= 0:
            raise ValueError("harmonic closed form needs h0 > 0")
        amp = math.sqrt(2.0 * h0 / m) / pot.omega
        if np.any(np.abs(qa) > amp * (1 + 1e-15)):
            raise ValueError(f"|q| exceeds the amplitude A={amp:.12g}")
        out = setup.t0 + s * np.arccos(np.clip(qa / amp, -1.0, 1.0)) / pot.omega + 0j
    else:
        raise TypeError(f"no closed form for potential type {pot.type!r}")
    return np.asarray(out, dtype=complex)[()]


def amplitude(setup: ClassicalSetup) -> float:
    pot = setup.potential
    if not isinstance(pot, Harmonic):
        raise TypeError("amplitude is defined for the harmonic oscillator only")
    return math.sqrt(2.0 * setup.h0 / setup.scales.mass) / pot.omega


# ---------------------------------------------------------------------------
# trajectories


def trajectory(setup: ClassicalSetup, q_grid, n_steps: int = 12) -> TimeTrajectory:
    """Sample ``t(q)`` on an ordered grid by cumulative per-cell quadrature.

    The first sample is anchored to the closed form when one exists, else
    to ``t0``.
    """
    q = np.asarray(q_grid, dtype=float)
    if q.ndim != 1 or len(q) < 2:
        raise ValueError("q_grid needs at least 2 points")
    if np.any(np.diff(q) <= 0):
        raise ValueError("q_grid must be strictly increasing")
    _check_path(setup, q[0], q[-1])
    try:
        start = complex(analytic_time(setup, q[0]))
    except (TypeError, ValueError):
        start = setup.t0
    sign = -setup.branch.sign
    steps = np.array([_flight_integral(setup, a, b, n_steps, levels=12) for a, b in zip(q[:-1], q[1:])])
    t = start + sign * np.concatenate(([0j], np.cumsum(steps)))
    root = _root_2mk(setup, q)
    with np.errstate(divide="ignore", invalid="ignore"):
        tp = np.where(root == 0, np.inf + 0j, -setup.branch.sign * setup.scales.mass / np.where(root == 0, 1, root))
    return TimeTrajectory(q, t, tp, setup)


def newton_residual(traj: TimeTrajectory, setup: ClassicalSetup | None = None) -> np.ndarray:
    """``|-m t'' / t'**3 - F(q)|`` with ``t''`` from second differences of ``t``.

    Endpoints use the one-sided second-order stencil.
    """
    setup = setup or traj.setup
    if setup is None:
        raise ValueError("a ClassicalSetup is required")
    q = np.asarray(traj.q_grid, dtype=float)
    t = np.asarray(traj.t_values, dtype=complex)
    tp = np.asarray(traj.t_prime, dtype=complex)
    if len(q) < 5:
        raise ValueError("newton_residual needs at least 5 points")
    h = (q[-1] - q[0]) / (len(q) - 1)
    if np.max(np.abs(np.diff(q) - h)) > 1e-9 * max(abs(h), 1.0):
        raise ValueError("newton_residual needs a uniform q grid")
    if not np.all(np.isfinite(tp)):
        raise TurningPointError("trajectory contains a turning point")
    tpp = np.empty_like(t)
    tpp[1:-1] = (t[2:] - 2.0 * t[1:-1] + t[:-2]) / h**2
    tpp[0] = (2.0 * t[0] - 5.0 * t[1] + 4.0 * t[2] - t[3]) / h**2
    tpp[-1] = (2.0 * t[-1] - 5.0 * t[-2] + 4.0 * t[-3] - t[-4]) / h**2
    force = evaluate_force(setup.potential, q, setup.scales)
    return np.abs(-setup.scales.mass * tpp / tp**3 - force)


def reconstructed_energy(traj: TimeTrajectory, setup: ClassicalSetup | None = None) -> np.ndarray:
    """``m / (2 t'**2) + V(q)`` along the trajectory."""
    setup = setup or traj.setup
    tp = np.asarray(traj.t_prime, dtype=complex)
    return setup.scales.mass / (2.0 * tp**2) + evaluate_potential(setup.potential, traj.q_grid, setup.scales)
