"""Coupled first-order time-independent Dirac pair ``chi+-(q)``.

With ``s(q)`` the coupling momentum (a square root of ``2 m V``) the pair is

    hbar chi-' = -s chi- + i P+ chi+
    hbar chi+' =  s chi+ + i P- chi-

Eliminating one channel gives a Schroedinger-type equation for the other,
``-(hbar^2/2m) chi'' + V_eff chi = K0 chi`` with ``V_eff = V +- hbar s'/(2m)``
(plus sign for ``chi+``), i.e. the potential shifted by ``-+ hbar F / (2 s)``.
"""

from __future__ import annotations

import cmath
import csv
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .integrate import IntegrationResult, StepPolicy, dopri45
from .model import (
    DEFAULT_SCALES,
    Branch,
    ConstantForce,
    Coulomb1D,
    Free,
    Harmonic,
    InvertedHarmonic,
    PhysicalScales,
    Potential,
    SingularShiftError,
    coupling_derivative,
    coupling_function,
    coupling_momentum,
    evaluate_potential,
    potential_to_dict,
)
from .pide import SeparationConstants, constants_from_k0

CSV_HEADER = ["q", "re_chi_plus", "im_chi_plus", "abs2_chi_plus", "re_chi_minus", "im_chi_minus", "abs2_chi_minus"]

# Outward growth of an off-spectrum HO solution is ~exp(q^2/2); the bounded
# ones stay O(1) out to q ~ 8 at rtol 1e-10, so a small relative guard
# separates the two well before the window edge.
HARMONIC_GUARD = 1e4


@dataclass(frozen=True)
class TideSolution:
    q_grid: np.ndarray
    chi_plus: np.ndarray
    chi_minus: np.ndarray
    constants: SeparationConstants
    potential: Potential
    normalized: bool = False
    scales: PhysicalScales = DEFAULT_SCALES
    status: str = "converged"
    diverged_at: float | None = None
    rotations: int = 0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if not (len(self.q_grid) == len(self.chi_plus) == len(self.chi_minus)):
            raise ValueError("q_grid, chi_plus and chi_minus must have equal length")

    @property
    def diverged(self) -> bool:
        return self.status != "converged"

    def normalize(self) -> "TideSolution":
        """Scale each channel to unit trapezoid norm over the window.

        A channel that vanishes identically is left at zero.
        """
        q = self.q_grid
        out = []
        for chi in (self.chi_plus, self.chi_minus):
            nrm = math.sqrt(float(np.trapezoid(np.abs(chi) ** 2, q))) if len(q) > 1 else 0.0
            out.append(chi / nrm if nrm > 0 else chi.copy())
        return replace(self, chi_plus=out[0], chi_minus=out[1], normalized=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for q, p, m in zip(self.q_grid, self.chi_plus, self.chi_minus):
            w.writerow([f"{v:.17g}" for v in (q, p.real, p.imag, abs(p) ** 2, m.real, m.imag, abs(m) ** 2)])
        return buf.getvalue()

    def manifest(self) -> dict:
        return {
            "potential": potential_to_dict(self.potential),
            "scales": {"hbar": self.scales.hbar, "mass": self.scales.mass},
            "constants": self.constants.as_dict(),
            "window": [float(self.q_grid[0]), float(self.q_grid[-1])] if len(self.q_grid) else None,
            "points": int(len(self.q_grid)),
            "rotations": self.rotations,
            "normalized": self.normalized,
            "status": "converged" if not self.diverged else "diverged-at-q",
            "diverged_at": self.diverged_at,
            **self.meta,
        }


# ---------------------------------------------------------------------------
# effective potential and decoupled solutions


@dataclass(frozen=True)
class EffectivePotentialSample:
    q: float
    v: float
    shift_plus: complex
    shift_minus: complex


def potential_shift(pot: Potential, scales: PhysicalScales, q):
    """``hbar s'/(2m) = -hbar F / (2 s)``, the shift of the ``chi+`` channel."""
    return (scales.hbar * np.asarray(coupling_derivative(pot, scales, q)) / (2.0 * scales.mass))[()]


def effective_potential(pot: Potential, scales: PhysicalScales, branch, q):
    branch = Branch.parse(branch)
    v = np.asarray(evaluate_potential(pot, q, scales), dtype=complex)
    return (v + branch.sign * np.asarray(potential_shift(pot, scales, q)))[()]


def effective_potential_sample(pot: Potential, scales: PhysicalScales, q: float) -> EffectivePotentialSample:
    shift = complex(potential_shift(pot, scales, q))
    return EffectivePotentialSample(float(q), float(evaluate_potential(pot, q, scales)), shift, -shift)


def coupling_integral(pot: Potential, scales: PhysicalScales, q):
    """``int_0^q s(x) dx`` in closed form (the decoupled exponent times hbar)."""
    m = scales.mass
    q = np.asarray(q, dtype=float)
    if isinstance(pot, Free):
        out = np.zeros_like(q, dtype=complex)
    elif isinstance(pot, Harmonic):
        out = 0.5 * m * pot.omega * q * q + 0j
    elif isinstance(pot, InvertedHarmonic):
        out = 0.5j * m * pot.omega * q * q
    elif isinstance(pot, ConstantForce):
        if pot.f0 == 0:
            out = np.zeros_like(q, dtype=complex)
        else:
            def u32(x):
                u = np.asarray(-2.0 * m * pot.f0 * (x - pot.q0), dtype=complex)
                return u * np.sqrt(u)

            out = -(u32(q) - u32(0.0)) / (3.0 * m * pot.f0)
    elif isinstance(pot, Coulomb1D):
        evaluate_potential(pot, q, scales)  # domain check
        out = 1j * np.sign(q) * np.sqrt(8.0 * m * pot.e2 * np.abs(q))
    else:
        raise TypeError(f"unsupported potential {pot!r}")
    return np.asarray(out, dtype=complex)[()]


def decoupled_solution(pot: Potential, scales: PhysicalScales, branch, q_grid, chi0: complex | None = None):
    """``K0 = 0`` solution ``chi(0) exp(+-(1/hbar) int_0^q s)`` (``+`` for Plus).

    ``chi0`` defaults to the normalised Gaussian amplitude for the HO and 1
    otherwise.
    """
    branch = Branch.parse(branch)
    if chi0 is None:
        if isinstance(pot, Harmonic):
            chi0 = (scales.mass * pot.omega / (math.pi * scales.hbar)) ** 0.25
        else:
            chi0 = 1.0
    phase = coupling_integral(pot, scales, q_grid)
    return (complex(chi0) * np.exp(branch.sign * phase / scales.hbar))[()]


# ---------------------------------------------------------------------------
# q -> i q rotation


@dataclass(frozen=True)
class RotatedProblem:
    """Coupled pair after ``rotations`` substitutions ``q -> i q``.

    With ``k = i**rotations`` the pair becomes
    ``hbar chi-' = k(-s(k x) chi- + i P+ chi+)`` and
    ``hbar chi+' = k(s(k x) chi+ + i P- chi-)``: the coupling momentum turns
    into ``k s(k x)`` and the separation constants into ``k P``.
    """

    potential: Potential
    constants: SeparationConstants
    rotations: int = 1

    def __post_init__(self) -> None:
        if not isinstance(self.potential, (Harmonic, InvertedHarmonic)):
            raise TypeError("the q -> iq rotation is implemented for the harmonic family only")
        object.__setattr__(self, "rotations", int(self.rotations) % 4)

    @property
    def factor(self) -> complex:
        return 1j ** self.rotations

    def effective_constants(self) -> SeparationConstants:
        k = self.factor
        c = self.constants
        return SeparationConstants(k * c.pt_plus, k * c.pt_minus, c.mass)

    def effective_potential_value(self, q, scales: PhysicalScales = DEFAULT_SCALES):
        """``s_eff^2 / 2m = k^2 V(k x)``.

        For the harmonic family the well keeps its sign while ``K0`` flips,
        which is how a negative ``K0`` lands on the ordinary ladder.
        """
        s = self.coupling(scales)
        return np.vectorize(lambda x: s(x) ** 2 / (2.0 * scales.mass))(np.asarray(q, dtype=float))[()]

    def coupling(self, scales: PhysicalScales = DEFAULT_SCALES):
        base = coupling_function(self.potential, scales)
        k = self.factor
        if self.rotations == 0:
            return base
        return lambda x: k * base(k * x)

    def coupling_slope(self, scales: PhysicalScales = DEFAULT_SCALES) -> complex:
        """``d s_eff / dx`` (constant for the harmonic family)."""
        k = self.factor
        return complex(k * k * coupling_derivative(self.potential, scales, 0.0))

    def rotate(self, times: int = 1) -> "RotatedProblem":
        return RotatedProblem(self.potential, self.constants, self.rotations + times)


def rotate_q_imaginary(pot: Potential, constants: SeparationConstants, times: int = 1) -> RotatedProblem:
    return RotatedProblem(pot, constants, times)


# ---------------------------------------------------------------------------
# integration


def _pair_rhs(s_fn, constants: SeparationConstants, hbar: float):
    ipp = 1j * constants.pt_plus / hbar
    ipm = 1j * constants.pt_minus / hbar
    inv = 1.0 / hbar

    def rhs(x, y):
        s = s_fn(x) * inv
        cp, cm = y
        return (s * cp + ipm * cm, -s * cm + ipp * cp)

    return rhs


def _run(s_fn, constants, hbar, q_start, q_end, chi0_plus, chi0_minus, policy, n_points) -> IntegrationResult:
    grid = np.linspace(q_start, q_end, n_points)
    return dopri45(_pair_rhs(s_fn, constants, hbar), (chi0_plus, chi0_minus), grid, policy)


def _to_solution(res: IntegrationResult, pot, scales, constants, rotations=0, meta=None) -> TideSolution:
    q, y = res.x, res.y
    if len(q) > 1 and q[-1] < q[0]:
        q, y = q[::-1], y[::-1]
    diverged = res.status != "converged"
    return TideSolution(
        np.array(q), np.array(y[:, 0]), np.array(y[:, 1]), constants, pot,
        scales=scales, status=res.status, diverged_at=float(res.x_reached) if diverged else None,
        rotations=rotations, meta=dict(meta or {}),
    )


def integrate_coupled(
    pot: Potential,
    scales: PhysicalScales,
    constants: SeparationConstants,
    q_start: float,
    q_end: float,
    chi0_plus: complex,
    chi0_minus: complex,
    step_policy: StepPolicy = StepPolicy(),
    n_points: int = 2001,
) -> TideSolution:
    """Adaptive Dormand-Prince run from ``q_start`` to ``q_end``.

    The solution is sampled on ``n_points`` uniform points and stored in
    increasing ``q`` order.  On divergence it is truncated at the last point
    reached and ``diverged_at`` records the position where the guard tripped.
    """
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    if constants.mass != scales.mass:
        raise ValueError("constants.mass and scales.mass disagree")
    s_fn = coupling_function(pot, scales)
    res = _run(s_fn, constants, scales.hbar, q_start, q_end, chi0_plus, chi0_minus, step_policy, n_points)
    meta = {"step_policy": _policy_dict(step_policy), "seed": _seed_dict(chi0_plus, chi0_minus), "start": q_start}
    return _to_solution(res, pot, scales, constants, meta=meta)


def _policy_dict(p: StepPolicy) -> dict:
    return {
        "initial_step": p.initial_step,
        "rtol": p.rtol,
        "atol": p.atol,
        "divergence_threshold": p.divergence_threshold,
    }


def _seed_dict(a: complex, b: complex) -> dict:
    a, b = complex(a), complex(b)
    return {"chi_plus": [a.real, a.imag], "chi_minus": [b.real, b.imag]}


# ---------------------------------------------------------------------------
# harmonic oscillator


def ho_eigenstate(n: int, q, scales: PhysicalScales = DEFAULT_SCALES, omega: float = 1.0):
    """Normalised HO eigenfunction ``phi_n(q)`` by the stable three-term recurrence."""
    if n < 0:
        raise ValueError("n must be >= 0")
    a = math.sqrt(scales.mass * omega / scales.hbar)
    xi = a * np.asarray(q, dtype=float)
    prev = np.zeros_like(xi)
    cur = math.sqrt(a) * math.pi**-0.25 * np.exp(-0.5 * xi * xi)
    for k in range(n):
        prev, cur = cur, math.sqrt(2.0 / (k + 1)) * xi * cur - math.sqrt(k / (k + 1)) * prev
    return cur[()]


def ho_eigenstate_derivative(n: int, q, scales: PhysicalScales = DEFAULT_SCALES, omega: float = 1.0):
    a = math.sqrt(scales.mass * omega / scales.hbar)
    lower = ho_eigenstate(n - 1, q, scales, omega) if n > 0 else 0.0
    upper = ho_eigenstate(n + 1, q, scales, omega)
    return (a * (math.sqrt(n / 2.0) * np.asarray(lower) - math.sqrt((n + 1) / 2.0) * np.asarray(upper)))[()]


def ho_level_index(energy: float, omega: float, hbar: float) -> int:
    """Nearest ``n`` with ``(n + 1/2) hbar omega = energy`` (may be negative).

    Halfway cases round up.
    """
    return int(math.floor(energy / (hbar * omega)))


def harmonic_channel_energies(pot: Harmonic, scales: PhysicalScales, constants: SeparationConstants, rotations: int = 0):
    """Energies ``(E+, E-)`` read by the two channels: ``K0_eff -+ hbar s_eff'/2m``."""
    prob = RotatedProblem(pot, constants, rotations)
    k_eff = prob.effective_constants().k0()
    slope = prob.coupling_slope(scales)
    shift = scales.hbar * slope / (2.0 * scales.mass)
    return k_eff - shift, k_eff + shift


def harmonic_seed(pot: Harmonic, scales: PhysicalScales, constants: SeparationConstants, rotations: int = 0):
    """Initial values at ``q = 0`` from the eigenstate matching each channel.

    The channel whose energy sits on or above the ground level is seeded with
    ``phi_n(0)`` (``n`` nearest to its energy); the other channel follows from
    the first-order equations so that the seeded one starts with ``phi_n'(0)``.
    """
    prob = RotatedProblem(pot, constants, rotations)
    c = prob.effective_constants()
    s0 = prob.coupling(scales)(0.0)
    e_plus, e_minus = harmonic_channel_energies(pot, scales, constants, rotations)
    hw = scales.hbar * pot.omega
    n_minus = ho_level_index(e_minus.real, pot.omega, scales.hbar)
    n_plus = ho_level_index(e_plus.real, pot.omega, scales.hbar)
    hbar = scales.hbar
    if n_minus >= 0 or n_plus < 0:
        n = max(n_minus, 0)
        val = complex(ho_eigenstate(n, 0.0, scales, pot.omega))
        der = complex(ho_eigenstate_derivative(n, 0.0, scales, pot.omega))
        chi_minus = val
        chi_plus = 0j if c.pt_plus == 0 else (hbar * der + s0 * val) / (1j * c.pt_plus)
        return chi_plus, chi_minus, {"seeded": "chi_minus", "n": n, "energy": e_minus.real / hw}
    n = n_plus
    val = complex(ho_eigenstate(n, 0.0, scales, pot.omega))
    der = complex(ho_eigenstate_derivative(n, 0.0, scales, pot.omega))
    chi_plus = val
    chi_minus = 0j if c.pt_minus == 0 else (hbar * der - s0 * val) / (1j * c.pt_minus)
    return chi_plus, chi_minus, {"seeded": "chi_plus", "n": n, "energy": e_plus.real / hw}


def solve_harmonic(
    pot: Harmonic,
    scales: PhysicalScales,
    constants: SeparationConstants,
    window: tuple[float, float],
    n_points: int = 4001,
    step_policy: StepPolicy | None = None,
    rotations: int = 0,
) -> TideSolution:
    """Integrate the HO pair outward from ``q = 0`` to both window edges.

    ``n_points`` is the number of samples over the whole window, which must
    contain 0 as a grid point (symmetric windows with odd counts do).
    """
    if not isinstance(pot, Harmonic):
        raise TypeError("solve_harmonic needs a Harmonic potential")
    lo, hi = float(window[0]), float(window[1])
    if not lo < 0 < hi:
        raise ValueError("the window must contain q = 0 in its interior")
    grid = np.linspace(lo, hi, n_points)
    i0 = int(np.argmin(np.abs(grid)))
    if abs(grid[i0]) > 1e-12 * (hi - lo):
        raise ValueError("q = 0 must be a grid point; use a symmetric window with an odd point count")
    policy = step_policy or StepPolicy(divergence_threshold=HARMONIC_GUARD)
    prob = RotatedProblem(pot, constants, rotations)
    s_fn = prob.coupling(scales)
    c_eff = prob.effective_constants()
    cp0, cm0, info = harmonic_seed(pot, scales, constants, rotations)
    rhs = _pair_rhs(s_fn, c_eff, scales.hbar)
    right = dopri45(rhs, (cp0, cm0), grid[i0:], policy)
    left = dopri45(rhs, (cp0, cm0), grid[i0::-1], policy)
    q = np.concatenate((left.x[::-1], right.x[1:]))
    y = np.concatenate((left.y[::-1], right.y[1:]))
    status, where = "converged", None
    for res in (left, right):
        if res.status != "converged":
            status = "diverged"
            if where is None or abs(res.x_reached) < abs(where):
                where = float(res.x_reached)
    meta = {
        "step_policy": _policy_dict(policy),
        "seed": _seed_dict(cp0, cm0),
        "seeded_channel": info["seeded"],
        "seed_level": info["n"],
        "start": 0.0,
    }
    return TideSolution(
        q, y[:, 0].copy(), y[:, 1].copy(), constants, pot, scales=scales,
        status=status, diverged_at=where, rotations=prob.rotations, meta=meta,
    )


def ho_window(k: float) -> tuple[float, float]:
    """Plot window growing from [-2, 2] at ``K0 = 0`` to [-4.1, 4.1] at ``K0 = 5 hbar omega``."""
    half = 2.0 + 2.1 * max(k, 0.0) / 5.0
    return -half, half


# ---------------------------------------------------------------------------
# hydrogen


def _laguerre(k: int, alpha: float, x):
    """Generalised Laguerre ``L_k^alpha(x)`` by recurrence."""
    x = np.asarray(x, dtype=float)
    prev = np.zeros_like(x)
    cur = np.ones_like(x)
    for j in range(k):
        prev, cur = cur, ((2 * j + 1 + alpha - x) * cur - (j + alpha) * prev) / (j + 1)
    return cur


def hydrogen_eigenstate(n: int, parity: str, q, a0: float = 1.0):
    """Loudon-type 1D hydrogen state.

    ``sqrt(2/(a0^3 n^5 (n!)^2)) exp(-|q|/(n a0)) q L_n^1(2|q|/(n a0))`` for odd
    parity (``|q|`` for even), with the associated Laguerre function in the
    older convention ``L_n^1 = n! L_{n-1}^{(1)}`` (sign dropped).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if parity not in ("odd", "even"):
        raise ValueError("parity must be 'odd' or 'even'")
    q = np.asarray(q, dtype=float)
    aq = np.abs(q)
    x = 2.0 * aq / (n * a0)
    lag = math.factorial(n) * _laguerre(n - 1, 1.0, x)
    pref = math.sqrt(2.0 / (a0**3 * n**5 * math.factorial(n) ** 2))
    lead = q if parity == "odd" else aq
    return (pref * np.exp(-aq / (n * a0)) * lead * lag)[()]


def hydrogen_energy(n: int, scales: PhysicalScales = DEFAULT_SCALES, e2: float = 1.0) -> float:
    """``-m e^4 / (2 hbar^2 n^2)``; ``-1/(2 n^2)`` in scaled units."""
    return -scales.mass * e2**2 / (2.0 * scales.hbar**2 * n * n)


def hydrogen_constants(k0: float, mass: float = 1.0, forward: str = "unit-plus") -> SeparationConstants:
    """Separation constants for the hydrogen sweep.

    ``K0 < 0``: ``P+ = P- = i sqrt(2 m |K0|)``.  ``K0 > 0``: ``"unit-plus"``
    fixes ``P+ = 1`` and ``P- = 2 m K0``; ``"symmetric"`` uses
    ``P+ = P- = sqrt(2 m K0)``.
    """
    if k0 <= 0:
        return constants_from_k0(k0, mass)
    if forward == "unit-plus":
        return SeparationConstants(1.0, 2.0 * mass * k0, mass)
    if forward == "symmetric":
        p = math.sqrt(2.0 * mass * k0)
        return SeparationConstants(p, p, mass)
    raise ValueError(f"unknown forward factorisation {forward!r}")


def solve_hydrogen(
    pot: Coulomb1D,
    scales: PhysicalScales,
    constants: SeparationConstants,
    q_max: float = 130.0,
    n_points: int = 20001,
    step_policy: StepPolicy | None = None,
) -> TideSolution:
    """Hydrogen pair on ``[-q_max, -epsilon]``.

    ``K0 < 0``: inward from ``-q_max`` with both channels at
    ``e^{i pi/4} exp(-kappa q_max)``, ``kappa = sqrt(2 m |K0|)/hbar`` (the
    solution that decays toward ``-inf``).  Otherwise outward from
    ``-epsilon`` with ``(chi+, chi-) = (0, 1)``.
    """
    if not isinstance(pot, Coulomb1D):
        raise TypeError("solve_hydrogen needs a Coulomb1D potential")
    if not q_max > pot.epsilon:
        raise ValueError("q_max must exceed epsilon")
    policy = step_policy or StepPolicy(initial_step=1e-5)
    k0 = constants.k0()
    if k0.real < 0:
        kappa = math.sqrt(2.0 * scales.mass * abs(k0.real)) / scales.hbar
        seed = cmath.exp(0.25j * math.pi) * math.exp(-kappa * q_max)
        sol = integrate_coupled(pot, scales, constants, -q_max, -pot.epsilon, seed, seed, policy, n_points)
    else:
        sol = integrate_coupled(pot, scales, constants, -pot.epsilon, -q_max, 0j, 1 + 0j, policy, n_points)
    return sol


# ---------------------------------------------------------------------------
# checks


def overlap(a, b, q_grid, tol: float = 1e-6) -> complex:
    """Trapezoid ``int conj(a) b dq``; both inputs must be normalised."""
    a = np.asarray(a)
    b = np.asarray(b)
    q = np.asarray(q_grid, dtype=float)
    if not (a.shape == b.shape == q.shape):
        raise ValueError("overlap needs samples on the same grid")
    for v in (a, b):
        nrm = float(np.trapezoid(np.abs(v) ** 2, q))
        if abs(nrm - 1.0) > tol:
            raise ValueError(f"overlap inputs must be normalised (norm {nrm:.6g})")
    return complex(np.trapezoid(np.conj(a) * b, q))


def normalize(samples, q_grid) -> np.ndarray:
    samples = np.asarray(samples)
    nrm = math.sqrt(float(np.trapezoid(np.abs(samples) ** 2, q_grid)))
    if nrm == 0:
        raise ValueError("cannot normalise a vanishing function")
    return samples / nrm


def second_order_residual(sol: TideSolution, mode: str = "shift") -> tuple[float, float]:
    """Centred second-difference residual of the channel equations.

    ``mode="shift"``: ``-(hbar^2/2m) chi'' + V_eff chi - K0 chi`` relative to
    ``sup |K0 chi|`` (``sup |V_eff chi|`` when ``K0 = 0``).
    ``mode="eigen"``: the shift moved to the right-hand side,
    ``-(hbar^2/2m) chi'' + V chi - (K0 -+ shift) chi`` relative to
    ``sup |(K0 -+ shift) chi|``.
    Returned as ``(r+, r-)``; a channel that vanishes gives 0.
    """
    if mode not in ("shift", "eigen"):
        raise ValueError("mode must be 'shift' or 'eigen'")
    q = np.asarray(sol.q_grid, dtype=float)
    if len(q) < 7:
        raise ValueError("second_order_residual needs at least 7 points")
    h = (q[-1] - q[0]) / (len(q) - 1)
    if np.max(np.abs(np.diff(q) - h)) > 1e-9 * max(abs(h), 1.0):
        raise ValueError("second_order_residual needs a uniform grid")
    scales, pot = sol.scales, sol.potential
    qi = q[1:-1]
    k0 = sol.constants.k0()
    v = np.asarray(evaluate_potential(pot, qi, scales), dtype=complex)
    if sol.rotations:
        prob = RotatedProblem(pot, sol.constants, sol.rotations)
        k0 = prob.effective_constants().k0()
        v = np.asarray(prob.effective_potential_value(qi, scales), dtype=complex)
        shift = scales.hbar * prob.coupling_slope(scales) / (2.0 * scales.mass) * np.ones_like(v)
    else:
        try:
            shift = np.asarray(potential_shift(pot, scales, qi), dtype=complex)
        except SingularShiftError:
            raise
    kin = scales.hbar**2 / (2.0 * scales.mass)
    out = []
    for chi, sign in ((sol.chi_plus, 1.0), (sol.chi_minus, -1.0)):
        chi = np.asarray(chi, dtype=complex)
        if not np.any(chi):
            out.append(0.0)
            continue
        d2 = (chi[2:] - 2.0 * chi[1:-1] + chi[:-2]) / h**2
        c = chi[1:-1]
        if mode == "shift":
            res = -kin * d2 + (v + sign * shift) * c - k0 * c
            ref = np.max(np.abs(k0 * c)) if k0 != 0 else np.max(np.abs((v + sign * shift) * c))
        else:
            energy = k0 - sign * shift
            res = -kin * d2 + v * c - energy * c
            ref = np.max(np.abs(energy * c))
        r = float(np.max(np.abs(res)))
        out.append(r / ref if ref > 0 else r)
    return out[0], out[1]


def first_order_residual(sol: TideSolution) -> tuple[float, float]:
    """Fourth-order centred first-difference residual of the coupled equations, relative to ``sup |chi'|``."""
    q = np.asarray(sol.q_grid, dtype=float)
    if len(q) < 5:
        raise ValueError("first_order_residual needs at least 5 points")
    h = (q[-1] - q[0]) / (len(q) - 1)
    s = np.asarray(coupling_momentum(sol.potential, sol.scales, q[2:-2]), dtype=complex)
    hb = sol.scales.hbar
    cp, cm = np.asarray(sol.chi_plus), np.asarray(sol.chi_minus)
    c = sol.constants
    out = []
    for chi, rhs in (
        (cp, (s * cp[2:-2] + 1j * c.pt_minus * cm[2:-2]) / hb),
        (cm, (-s * cm[2:-2] + 1j * c.pt_plus * cp[2:-2]) / hb),
    ):
        d1 = (chi[:-4] - 8 * chi[1:-3] + 8 * chi[3:-1] - chi[4:]) / (12 * h)
        ref = np.max(np.abs(d1))
        r = float(np.max(np.abs(d1 - rhs)))
        out.append(r / ref if ref > 0 else r)
    return out[0], out[1]
