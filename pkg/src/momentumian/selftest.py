"""Property suite run by ``momentumian selftest``.

Each check returns ``(measured, tolerance, passed)``.  Random draws use fixed
seeds, so a report is reproducible apart from its timings.
"""

from __future__ import annotations

import cmath
import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import classical as cl
from . import pide, specfun, tide
from .model import (
    DEFAULT_SCALES,
    Branch,
    ConstantForce,
    Coulomb1D,
    Free,
    Harmonic,
    InvertedHarmonic,
    characteristic_momentum,
    evaluate_force,
    evaluate_potential,
)

S = DEFAULT_SCALES


@dataclass
class CheckReport:
    name: str
    group: str
    passed: bool
    measured: float
    tolerance: float
    seconds: float
    error: str | None = None

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        if self.error:
            return f"{tag}  {self.name}: error: {self.error} ({self.seconds:.2f}s)"
        return f"{tag}  {self.name}: measured {self.measured:.3e}, tolerance {self.tolerance:.1e} ({self.seconds:.2f}s)"


CHECKS: list[tuple[str, str, Callable[[], tuple[float, float, bool]]]] = []


def check(group: str, name: str):
    def deco(fn):
        CHECKS.append((group, f"{group}.{name}", fn))
        return fn

    return deco


def _upto(measured: float, tol: float) -> tuple[float, float, bool]:
    return float(measured), tol, bool(measured <= tol)


def _atleast(measured: float, floor: float) -> tuple[float, float, bool]:
    return float(measured), floor, bool(measured >= floor)


def _disc(rng, radius: float) -> complex:
    return radius * math.sqrt(rng.random()) * cmath.exp(2j * math.pi * rng.random())


# ---------------------------------------------------------------------------
# model

_POTENTIALS = [Free(), ConstantForce(-1.3, 0.2), Harmonic(1.7), InvertedHarmonic(0.8), Coulomb1D()]


@check("model", "force-is-minus-gradient")
def _force_gradient():
    q = np.concatenate((np.linspace(-3, -0.5, 11), np.linspace(0.5, 3, 11)))
    h = 1e-5
    worst = 0.0
    for pot in _POTENTIALS:
        fd = -(evaluate_potential(pot, q + h, S) - evaluate_potential(pot, q - h, S)) / (2 * h)
        worst = max(worst, float(np.max(np.abs(fd - evaluate_force(pot, q, S)))))
    return _upto(worst, 1e-8)


@check("model", "characteristic-momentum-squared")
def _char_momentum():
    q = np.concatenate((np.linspace(-3, -0.5, 11), np.linspace(0.5, 3, 11)))
    worst = 0.0
    for pot in _POTENTIALS:
        v = np.asarray(evaluate_potential(pot, q, S))
        p = np.asarray(characteristic_momentum(pot, S, q))
        worst = max(worst, float(np.max(np.abs(p * p - 2 * S.mass * v) / np.maximum(1.0, np.abs(v)))))
    return _upto(worst, 1e-12)


@check("model", "branch-involution")
def _branch():
    ok = len(Branch) == 2 and all(b.swap().swap() is b and b.swap() is not b for b in Branch)
    return 0.0 if ok else 1.0, 0.0, ok


# ---------------------------------------------------------------------------
# classical


def _random_case(rng, kind: str):
    h0 = rng.uniform(0.2, 3.0)
    if kind == "free":
        setup = cl.ClassicalSetup(Free(), h0=h0)
        a, b = rng.uniform(-5, 5, 2)
        return setup, a, b, False
    if kind == "force":
        f = -rng.uniform(0.3, 2.0)
        setup = cl.ClassicalSetup(ConstantForce(f), h0=h0)
        qt = h0 / -f
        a = rng.uniform(-3, qt)
        b = rng.uniform(-3, qt) if rng.random() < 0.7 else qt
        return setup, a, b, b == qt
    w = rng.uniform(0.5, 2.0)
    setup = cl.ClassicalSetup(Harmonic(w), h0=h0)
    amp = cl.amplitude(setup)
    a = rng.uniform(-amp, amp)
    b = rng.uniform(-amp, amp) if rng.random() < 0.7 else amp
    return setup, a, b, b == amp


def classical_oracle_errors(draws: int = 100, seed: int = 0) -> tuple[float, float]:
    """Worst relative errors (interior endpoints, turning-point endpoints)."""
    rng = np.random.default_rng(seed)
    interior = turning = 0.0
    for i in range(draws):
        setup, a, b, at_tp = _random_case(rng, ("free", "force", "harmonic")[i % 3])
        if a == b:
            continue
        quad = cl.time_of_flight(setup, a, b)
        ana = cl.analytic_time(setup, b) - cl.analytic_time(setup, a)
        err = abs(quad - ana) / abs(ana)
        if at_tp:
            turning = max(turning, err)
        else:
            interior = max(interior, err)
    return interior, turning


@check("classical", "oracle-equivalence")
def _oracle():
    return _upto(classical_oracle_errors()[0], 1e-8)


@check("classical", "oracle-equivalence-turning-point")
def _oracle_tp():
    return _upto(classical_oracle_errors()[1], 1e-6)


@check("classical", "ho-quarter-period")
def _quarter():
    setup = cl.ClassicalSetup(Harmonic(1.3), h0=0.7)
    t = cl.time_of_flight(setup, 0.0, cl.amplitude(setup))
    return _upto(abs(abs(t) - math.pi / (2 * 1.3)), 1e-6)


@check("classical", "branch-symmetry")
def _branch_symmetry():
    worst = 0.0
    for pot, a, b in [(Free(), -1.0, 2.0), (ConstantForce(-1.0), -1.0, 0.4), (Harmonic(), -0.9, 0.6)]:
        tp = cl.time_of_flight(cl.ClassicalSetup(pot, h0=0.5, branch=Branch.PLUS), a, b)
        tm = cl.time_of_flight(cl.ClassicalSetup(pot, h0=0.5, branch=Branch.MINUS), a, b)
        worst = max(worst, abs(tp + tm) / abs(tm))
    return _upto(worst, 1e-14)


@check("classical", "q-reflection-swaps-branch")
def _reflection():
    # for an even potential, Plus over [a, b] equals Minus over [-a, -b]
    plus = cl.time_of_flight(cl.ClassicalSetup(Harmonic(), h0=0.5, branch=Branch.PLUS), -0.3, 0.8)
    minus = cl.time_of_flight(cl.ClassicalSetup(Harmonic(), h0=0.5, branch=Branch.MINUS), 0.3, -0.8)
    return _upto(abs(plus - minus) / abs(plus), 1e-14)


@check("classical", "energy-conservation")
def _energy():
    worst = 0.0
    for pot, lo, hi in [(Free(), 0.0, 1.0), (Harmonic(), -0.9, 0.9), (ConstantForce(-1.0), 0.0, 0.45)]:
        setup = cl.ClassicalSetup(pot, h0=0.5)
        traj = cl.trajectory(setup, np.linspace(lo, hi, 501))
        worst = max(worst, float(np.max(np.abs(cl.reconstructed_energy(traj) - setup.h0))))
    return _upto(worst, 1e-10)


@check("classical", "forbidden-region-imaginary")
def _forbidden():
    worst = 0.0
    for pot, a, b in [(Harmonic(), 1.5, 3.0), (ConstantForce(-1.0), 0.6, 2.0)]:
        t = cl.time_of_flight(cl.ClassicalSetup(pot, h0=0.5), a, b)
        worst = max(worst, abs(t.real))
    return _upto(worst, 1e-12)


@check("classical", "harmonic-inversion")
def _inversion():
    setup = cl.ClassicalSetup(Harmonic(1.0), h0=0.5)
    q = np.linspace(-0.95, 0.95, 401)
    traj = cl.trajectory(setup, q)
    back = cl.amplitude(setup) * np.cos(np.real(traj.t_values - setup.t0))
    return _upto(float(np.max(np.abs(back - q))), 1e-8)


@check("classical", "newton-residual")
def _newton():
    worst = 0.0
    for pot, lo, hi in [(Harmonic(), -0.5, 0.5), (ConstantForce(-1.0), 0.0, 0.4)]:
        traj = cl.trajectory(cl.ClassicalSetup(pot, h0=0.5), np.linspace(lo, hi, 1001))
        worst = max(worst, float(np.max(cl.newton_residual(traj))))
    return _upto(worst, 1e-4)


# ---------------------------------------------------------------------------
# special functions


@check("specfun", "gamma-accuracy")
def _gamma():
    xs = np.linspace(0.5, 60.0, 400)
    return _upto(max(abs(specfun.gamma(float(x)) / math.gamma(float(x)) - 1.0) for x in xs), 1e-12)


def ml_exp_error(draws: int = 100, seed: int = 1) -> float:
    rng = np.random.default_rng(seed)
    z = np.array([_disc(rng, 5.0) for _ in range(draws)])
    return float(np.max(np.abs(specfun.mittag_leffler(1.0, z) - np.exp(z))))


def ml_identity_error(draws: int = 50, seed: int = 2) -> float:
    rng = np.random.default_rng(seed)
    z = np.array([_disc(rng, 4.0) for _ in range(draws)])
    y = np.sqrt(z)
    series = specfun.mittag_leffler(0.5, y, method="series")
    ident = np.exp(z) * specfun.erfc_complex(-y)
    return float(np.max(np.abs(series - ident)))


@check("specfun", "e1-equals-exp")
def _e1():
    return _upto(ml_exp_error(), 1e-12)


@check("specfun", "alpha-continuity")
def _continuity():
    rng = np.random.default_rng(3)
    z = np.array([_disc(rng, 2.0) for _ in range(50)])
    worst = max(float(np.max(np.abs(specfun.mittag_leffler(a, z) - np.exp(z)))) for a in (1 - 1e-6, 1 + 1e-6))
    return _upto(worst, 1e-4)


@check("specfun", "mittag-leffler-identity")
def _identity():
    return _upto(ml_identity_error(), 1e-10)


@check("specfun", "caputo-of-constant")
def _caputo_const():
    t = np.linspace(0, 2, 4001)
    return _upto(float(np.max(np.abs(specfun.caputo_half(specfun.CaputoGrid(t, np.full_like(t, 3.7)))))), 1e-12)


@check("specfun", "caputo-linearity")
def _caputo_linear():
    t = np.linspace(0, 2, 2001)
    f, g = np.sin(3 * t), t**2 + 1j * np.exp(-t)
    a, b = 1.7, -0.4 + 2j
    d = lambda x: specfun.caputo_half(specfun.CaputoGrid(t, x))
    lhs, rhs = d(a * f + b * g), a * d(f) + b * d(g)
    return _upto(float(np.max(np.abs(lhs - rhs)) / np.max(np.abs(rhs))), 1e-13)


def caputo_linear_error(n: int = 4001, t_max: float = 1.0) -> float:
    t = np.linspace(0, t_max, n)
    d = specfun.caputo_half(specfun.CaputoGrid(t, t.copy()))
    return float(np.max(np.abs(d - 2 * np.sqrt(t / math.pi))))


def caputo_order(n: int = 1001, t_max: float = 1.0) -> tuple[float, float]:
    """(error ratio, observed order) for ``f = t^2`` under 2x refinement."""
    errs = []
    for m in (n, 2 * n - 1):
        t = np.linspace(0, t_max, m)
        d = specfun.caputo_half(specfun.CaputoGrid(t, t * t))
        exact = t**1.5 / math.gamma(2.5) * 2.0
        errs.append(float(np.max(np.abs(d - exact))))
    ratio = errs[0] / errs[1]
    return ratio, math.log2(ratio)


@check("specfun", "caputo-of-t")
def _caputo_t():
    return _upto(caputo_linear_error(), 2e-3)


@check("specfun", "l1-refinement-order")
def _caputo_order():
    ratio, order = caputo_order()
    return _atleast(min(ratio / 2.5, order / 1.4), 1.0)


# ---------------------------------------------------------------------------
# PIDE


@check("pide", "zero-k0-constant")
def _pide_zero():
    pair = pide.PidePair.from_initial(pide.constants_from_k0(0.0))
    t = np.linspace(0, 10, 101)
    p, m = pide.psi_pair(pair, t)
    dev = max(float(np.max(np.abs(np.broadcast_to(p, t.shape) - 1))), float(np.max(np.abs(np.broadcast_to(m, t.shape) - 1))))
    return dev, 0.0, dev == 0.0


def fig2_late_band(k: float = 1.0, x_max: float = 400.0, n: int = 40001) -> tuple[float, float]:
    t = np.linspace(0, x_max / k, n)
    abs2 = pide.fig2_series([k], t)[k]
    late = abs2[k * t >= 50.0]
    return float(late.min()), float(late.max())


@check("pide", "fig2-late-band")
def _fig2_band():
    lo, hi = fig2_late_band()
    return _upto(max(abs(lo - 4.0), abs(hi - 4.0)), 0.25)


def pide_closed_form_residual(k0: float = 1.0, n: int = 8001, t_max: float = 2.0, t_min: float = 0.1) -> float:
    pair = pide.PidePair.from_initial(pide.constants_from_k0(k0))
    return max(pide.pide_residual(pair, np.linspace(0, t_max, n), t_min=t_min))


@check("pide", "closed-form-residual")
def _pide_residual():
    worst = max(pide_closed_form_residual(k) for k in (1.0, -1.0))
    return _upto(worst, 5e-2)


def rescaling_error(c: float = 2.5, k0: float = 0.8) -> float:
    t = np.linspace(0, 20, 2001)
    a = pide.fig2_series([c * k0], t)[c * k0]
    b = pide.fig2_series([k0], c * t)[k0]
    return float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))))


@check("pide", "time-rescaling")
def _rescaling():
    return _upto(rescaling_error(), 1e-12)


@check("pide", "initial-reconstruction")
def _reconstruction():
    worst = 0.0
    for cst in (pide.constants_from_k0(1.3), pide.constants_from_k0(-0.4), pide.SeparationConstants(0.5, 2 + 1j)):
        pair = pide.PidePair.from_initial(cst, 0.7 - 0.2j, -1.1 + 0.3j)
        p, m = pide.psi_pair(pair, 0.0)
        worst = max(worst, abs(p - pair.psi0_plus), abs(m - pair.psi0_minus))
    return _upto(worst, 1e-12)


@check("pide", "dirac-factorization")
def _dirac():
    worst = max(pide.DiracMatrices().identities().values())
    rng = np.random.default_rng(0)
    for _ in range(20):
        a, b = (complex(rng.uniform(-1, 1), rng.uniform(-1, 1)) for _ in range(2))
        worst = max(worst, pide.factorization_deviation(a, b))
    return _upto(worst, 1e-12)


# ---------------------------------------------------------------------------
# TIDE


@check("tide", "shift-antisymmetry")
def _shift():
    worst = 0.0
    for pot, q in [(Harmonic(1.4), np.linspace(-3, 3, 61)), (Coulomb1D(), np.linspace(-5, -0.01, 61))]:
        both = tide.effective_potential(pot, S, "plus", q) + tide.effective_potential(pot, S, "minus", q)
        worst = max(worst, float(np.max(np.abs(both - 2 * evaluate_potential(pot, q, S)))))
    return _upto(worst, 1e-12)


def decoupled_residual() -> float:
    """First-difference residual of the ``P = 0`` pair on the decoupled solutions."""
    worst = 0.0
    zero = pide.constants_from_k0(0.0)
    for pot, q in [(Harmonic(), np.linspace(-2, 2, 40001)), (Coulomb1D(), np.linspace(-20, -1, 40001))]:
        sol = tide.TideSolution(
            q,
            np.asarray(tide.decoupled_solution(pot, S, "plus", q)),
            np.asarray(tide.decoupled_solution(pot, S, "minus", q)),
            zero,
            pot,
        )
        worst = max(worst, *tide.first_order_residual(sol))
    return worst


@check("tide", "decoupled-consistency")
def _decoupled():
    return _upto(decoupled_residual(), 1e-8)


def ho_overlaps(k: int, window=None, n_points: int = 4001, rotations: int = 0) -> tuple[float, float, tide.TideSolution]:
    """Overlap moduli of normalised ``(chi-, chi+)`` with ``(phi_k, phi_{k-1})``."""
    win = window or tide.ho_window(abs(k))
    sol = tide.solve_harmonic(Harmonic(), S, pide.constants_from_k0(k), win, n_points, rotations=rotations)
    if sol.diverged:
        return 0.0, 0.0, sol
    nrm = sol.normalize()
    q = nrm.q_grid
    phi = lambda n: tide.normalize(tide.ho_eigenstate(n, q), q)
    if rotations:
        # one rotation of K0 = -k: chi- follows phi_{k-1}, chi+ follows phi_k
        return abs(tide.overlap(nrm.chi_minus, phi(abs(k) - 1), q)), abs(tide.overlap(nrm.chi_plus, phi(abs(k)), q)), sol
    om = abs(tide.overlap(nrm.chi_minus, phi(k), q))
    op = abs(tide.overlap(nrm.chi_plus, phi(k - 1), q)) if k >= 1 else 1.0
    return om, op, sol


@check("tide", "ho-quantization")
def _ho_quant():
    worst = min(min(ho_overlaps(k)[:2]) for k in (1, 2, 3))
    return _atleast(worst, 0.99)


@check("tide", "ho-off-spectrum-divergence")
def _ho_div():
    # report the largest |q| reached; the guard must trip before q = 8
    reached = 0.0
    for k in (1.5, 2.5, 3.5):
        sol = tide.solve_harmonic(Harmonic(), S, pide.constants_from_k0(k), (-8, 8), 4001)
        reached = max(reached, abs(sol.diverged_at) if sol.diverged else math.inf)
    return reached, 8.0, reached < 8.0


@check("tide", "ho-backward-rotation")
def _rotation():
    om, op, _ = ho_overlaps(-1, window=(-4, 4), rotations=1)
    return _atleast(min(om, op), 0.99)


@check("tide", "coupling-scale-freedom")
def _scale_freedom():
    base = pide.constants_from_k0(2.0)
    profiles = []
    for c in (1.0, 3.0, -0.5):
        cst = pide.SeparationConstants(c * base.pt_plus, base.pt_minus / c)
        sol = tide.solve_harmonic(Harmonic(), S, cst, tide.ho_window(2), 2001).normalize()
        profiles.append(np.abs(sol.chi_minus) ** 2)
    return _upto(max(float(np.max(np.abs(p - profiles[0]))) for p in profiles[1:]), 1e-8)


def hydrogen_backward(k0: float, q_max: float = 130.0, n_points: int = 20001) -> tide.TideSolution:
    return tide.solve_hydrogen(Coulomb1D(), S, tide.hydrogen_constants(k0), q_max, n_points)


def hydrogen_symmetry_error(sol: tide.TideSolution) -> float:
    """``Re chi+ = Im chi-`` and ``Im chi+ = Re chi-``, relative to ``sup |chi|``."""
    p, m = sol.chi_plus, sol.chi_minus
    scale = max(float(np.max(np.abs(p))), float(np.max(np.abs(m))))
    err = max(float(np.max(np.abs(p.real - m.imag))), float(np.max(np.abs(p.imag - m.real))))
    return err / scale


@check("tide", "hydrogen-backward-symmetry")
def _hyd_sym():
    sol = hydrogen_backward(-0.5, n_points=4001)
    return _upto(hydrogen_symmetry_error(sol), 1e-6)


def hydrogen_decoupled_modulus(q=None) -> float:
    q = np.linspace(-130, -1e-3, 20001) if q is None else q
    worst = 0.0
    for branch in Branch:
        chi = np.asarray(tide.decoupled_solution(Coulomb1D(), S, branch, q))
        worst = max(worst, float(np.max(np.abs(np.abs(chi) - 1.0))))
    return worst


@check("tide", "hydrogen-decoupled-modulus")
def _hyd_dec():
    return _upto(hydrogen_decoupled_modulus(), 1e-10)


# ---------------------------------------------------------------------------


def run_checks(groups: tuple[str, ...] | None = None) -> list[CheckReport]:
    reports = []
    for group, name, fn in CHECKS:
        if groups and group not in groups:
            continue
        start = time.perf_counter()
        try:
            measured, tol, ok = fn()
            err = None
        except Exception as exc:  # report, never raise
            measured, tol, ok, err = math.nan, math.nan, False, f"{type(exc).__name__}: {exc}"
        reports.append(CheckReport(name, group, bool(ok), measured, tol, time.perf_counter() - start, err))
    return reports


def selftest(groups=None, corrupt_gamma: float | None = None, stream=None) -> list[CheckReport]:
    """Run the suite, print one line per property and return the reports."""
    import sys

    out = stream or sys.stdout
    if corrupt_gamma:
        with specfun.corrupted_gamma(corrupt_gamma):
            reports = run_checks(groups)
    else:
        reports = run_checks(groups)
    for r in reports:
        print(r.line(), file=out)
    failed = sum(not r.passed for r in reports)
    print(f"{len(reports) - failed}/{len(reports)} properties passed", file=out)
    return reports
