"""Acceptance criteria 1-12, one PASS/FAIL line each (see the summary section of the pytest run).

Oracles are test-local closed forms, Hermite/Laguerre polynomials from
numpy/scipy, and mpmath; package code is only the system under test.
"""

import filecmp
import math
import os

import mpmath
import numpy as np
from numpy.polynomial.hermite import hermval

from momentumian import classical as cl
from momentumian import pide, scenarios, specfun, tide
from momentumian.model import DEFAULT_SCALES as S
from momentumian.model import Branch, ConstantForce, Coulomb1D, Free, Harmonic


def phi(n, q):
    c = np.zeros(n + 1)
    c[n] = 1.0
    return hermval(q, c) * np.exp(-q * q / 2) / math.sqrt(2**n * math.factorial(n) * math.sqrt(math.pi))


def wnorm(f, q):
    return f / math.sqrt(np.trapezoid(np.abs(f) ** 2, q))


def ovl(a, b, q):
    return abs(np.trapezoid(np.conj(wnorm(a, q)) * wnorm(b, q), q))


def exact_flight(kind, pot, h0, a, b, sign):
    """Closed-form t(b) - t(a) with m = 1, written independently of the package."""
    if kind == "free":
        val = (b - a) / math.sqrt(2 * h0)
    elif kind == "force":
        f = pot.f0
        val = (math.sqrt(max(2 * (h0 + f * b), 0.0)) - math.sqrt(max(2 * (h0 + f * a), 0.0))) / f
    else:
        w = pot.omega
        amp = math.sqrt(2 * h0) / w
        val = (math.asin(min(b / amp, 1.0)) - math.asin(min(a / amp, 1.0))) / w
    return -sign * val


def test_criterion_01_classical_closed_forms(acceptance):
    rng = np.random.default_rng(2024)
    interior = turning = 0.0
    for kind in ("free", "force", "harmonic"):
        for _ in range(100):
            h0 = rng.uniform(0.1, 4.0)
            branch = Branch.PLUS if rng.random() < 0.5 else Branch.MINUS
            at_tp = rng.random() < 0.3
            if kind == "free":
                pot = Free()
                a, b = rng.uniform(-10, 10, 2)
                at_tp = False
            elif kind == "force":
                pot = ConstantForce(-rng.uniform(0.2, 3.0))
                qt = h0 / -pot.f0
                a = rng.uniform(qt - 5, qt)
                b = qt if at_tp else rng.uniform(qt - 5, qt)
            else:
                pot = Harmonic(rng.uniform(0.3, 3.0))
                amp = math.sqrt(2 * h0) / pot.omega
                a = rng.uniform(-amp, amp)
                b = amp if at_tp else rng.uniform(-amp, amp)
            setup = cl.ClassicalSetup(pot, h0=h0, branch=branch)
            got = cl.time_of_flight(setup, a, b)
            want = exact_flight(kind, pot, h0, a, b, branch.sign)
            err = abs(got - want) / abs(want)
            if at_tp:
                turning = max(turning, err)
            else:
                interior = max(interior, err)
    quarter = max(
        abs(abs(cl.time_of_flight(cl.ClassicalSetup(Harmonic(w), h0=h0), 0.0, math.sqrt(2 * h0) / w)) - math.pi / (2 * w))
        for w, h0 in ((1.0, 0.5), (2.5, 0.3), (0.4, 3.0))
    )
    ok = interior <= 1e-8 and turning <= 1e-6 and quarter <= 1e-6
    acceptance("criterion 1 classical closed forms", ok,
               f"rel err {interior:.2e} (<=1e-8), turning-point {turning:.2e} (<=1e-6), quarter period {quarter:.2e} (<=1e-6)")
    assert ok


def test_criterion_02_newton_residual(acceptance):
    res = {}
    for name, pot, lo, hi in (("harmonic", Harmonic(), -0.5, 0.5), ("constant-force", ConstantForce(-1.0), 0.0, 0.4)):
        traj = cl.trajectory(cl.ClassicalSetup(pot, h0=0.5), np.linspace(lo, hi, 1001))
        res[name] = float(np.max(cl.newton_residual(traj)))
    ok = max(res.values()) <= 1e-4
    acceptance("criterion 2 Newton residual", ok, ", ".join(f"{k} {v:.2e}" for k, v in res.items()) + " (<=1e-4)")
    assert ok


def test_criterion_03_forbidden_region(acceptance):
    worst = 0.0
    for pot, h0, a, b in ((Harmonic(), 0.5, 1.2, 4.0), (ConstantForce(-1.0), 0.5, 0.7, 3.0), (Harmonic(2.0), 0.1, -3.0, -0.5)):
        for branch in Branch:
            t = cl.time_of_flight(cl.ClassicalSetup(pot, h0=h0, branch=branch), a, b)
            assert abs(t.imag) > 0
            worst = max(worst, abs(t.real))
    ok = worst <= 1e-12
    acceptance("criterion 3 forbidden region", ok, f"max |Re dt| {worst:.2e} (<=1e-12)")
    assert ok


def test_criterion_04_special_functions(acceptance):
    rng = np.random.default_rng(11)
    z = 5 * np.sqrt(rng.random(100)) * np.exp(2j * np.pi * rng.random(100))
    e1 = float(np.max(np.abs(specfun.mittag_leffler(1.0, z) - np.exp(z))))
    mpmath.mp.dps = 30
    z4 = 4 * np.sqrt(rng.random(50)) * np.exp(2j * np.pi * rng.random(50))
    y = np.sqrt(z4)
    series = specfun.mittag_leffler(0.5, y, method="series")
    ident = np.array([complex(mpmath.exp(mpmath.mpc(v)) * mpmath.erfc(-mpmath.sqrt(mpmath.mpc(v)))) for v in z4])
    half = float(np.max(np.abs(series - ident)))
    t = np.linspace(0, 1, 4001)
    const = float(np.max(np.abs(specfun.caputo_half(specfun.CaputoGrid(t, np.full_like(t, 1.7))))))
    lin = float(np.max(np.abs(specfun.caputo_half(specfun.CaputoGrid(t, t.copy())) - 2 * np.sqrt(t / math.pi))))
    # the L1 scheme is exact on f = t, so the refinement order is measured on t^2
    errs = []
    for n in (1001, 2001, 4001):
        tt = np.linspace(0, 1, n)
        errs.append(np.max(np.abs(specfun.caputo_half(specfun.CaputoGrid(tt, tt * tt)) - 2 * tt**1.5 / math.gamma(2.5))))
    order = float(min(np.log2(errs[0] / errs[1]), np.log2(errs[1] / errs[2])))
    ok = e1 <= 1e-12 and half <= 1e-10 and const <= 1e-12 and lin <= 2e-3 and order >= 1.4
    acceptance("criterion 4 special functions", ok,
               f"E1-exp {e1:.2e}, E1/2 series-identity {half:.2e}, Caputo(const) {const:.1e}, "
               f"Caputo(t) {lin:.2e}, order {order:.3f}")
    assert ok


def test_criterion_05_pide(acceptance):
    pair0 = pide.PidePair.from_initial(pide.constants_from_k0(0.0))
    p0, m0 = pide.psi_pair(pair0, np.linspace(0, 100, 1001))
    constant = bool(np.all(p0 == 1.0) and np.all(m0 == 1.0))

    band_lo, band_hi = math.inf, -math.inf
    for k in (0.5, 1.0, 2.0):
        t = np.linspace(0, 500 / k, 50001)
        abs2 = pide.fig2_series([k], t)[k]
        late = abs2[k * t >= 50]
        band_lo, band_hi = min(band_lo, late.min()), max(band_hi, late.max())
    band = 3.75 <= band_lo and band_hi <= 4.25

    t = np.linspace(0, 2, 8001)
    resid = max(max(pide.pide_residual(pide.PidePair.from_initial(pide.constants_from_k0(k)), t, t_min=0.1)) for k in (1.0, -1.0, 2.0))

    tt = np.linspace(0, 30, 3001)
    resc = max(float(np.max(np.abs(pide.fig2_series([c * 0.7], tt)[c * 0.7] - pide.fig2_series([0.7], c * tt)[0.7])))
               for c in (0.5, 2.0, 3.7))
    acceptance("criterion 5a PIDE K0=0 constant", constant, "psi+- identically 1")
    acceptance("criterion 5b PIDE late-time band", band, f"|psi+|^2 range for K0 t >= 50: [{band_lo:.4f}, {band_hi:.4f}] (need [3.75, 4.25])")
    acceptance("criterion 5c PIDE fractional residual", resid <= 5e-2, f"{resid:.2e} (<=5e-2)")
    acceptance("criterion 5d PIDE time rescaling", resc <= 1e-12, f"{resc:.2e} (<=1e-12)")
    assert constant and resid <= 5e-2 and resc <= 1e-12
    assert band, "late-time band not met"


def test_criterion_06_dirac_factorization(acceptance):
    ids = pide.DiracMatrices().identities()
    exact = max(ids.values()) == 0.0
    rng = np.random.default_rng(6)
    worst = 0.0
    alpha = np.array([[0, 1], [1, 0]], dtype=complex)
    beta = np.array([[-1j, 0], [0, 1j]], dtype=complex)
    assert np.array_equal(pide.DiracMatrices().alpha, alpha) and np.array_equal(pide.DiracMatrices().beta, beta)
    for _ in range(20):
        a, b = (complex(*rng.uniform(-1, 1, 2)) for _ in range(2))
        worst = max(worst, pide.factorization_deviation(a, b))
    ok = exact and worst <= 1e-12
    acceptance("criterion 6 Dirac factorization", ok, f"identities exact={exact}, scalar check {worst:.2e} (<=1e-12)")
    assert ok


def test_criterion_07_ho_ladder(acceptance):
    sol0 = tide.solve_harmonic(Harmonic(), S, pide.constants_from_k0(0), tide.ho_window(0), 4001).normalize()
    q = sol0.q_grid
    gauss = float(np.max(np.abs(sol0.chi_minus - wnorm(np.pi**-0.25 * np.exp(-q * q / 2), q))))
    o0 = ovl(sol0.chi_minus, phi(0, q), q)
    overlaps = {}
    for k in (1, 2, 5):
        sol = tide.solve_harmonic(Harmonic(), S, pide.constants_from_k0(k), tide.ho_window(k), 4001)
        qq = sol.q_grid
        overlaps[k] = (ovl(sol.chi_minus, phi(k, qq), qq), ovl(sol.chi_plus, phi(k - 1, qq), qq)) if not sol.diverged else (0, 0)
    div = tide.solve_harmonic(Harmonic(), S, pide.constants_from_k0(1.5), (-8, 8), 4001)
    guard = div.diverged and abs(div.diverged_at) < 8
    worst = min(min(v) for v in overlaps.values())
    ok = gauss <= 1e-6 and o0 >= 0.999 and worst >= 0.99 and guard
    acceptance("criterion 7 HO ladder", ok,
               f"Gaussian sup {gauss:.1e}, overlap0 {o0:.6f}, min overlap k=1,2,5 {worst:.6f}, "
               f"K0=1.5 guard at q={div.diverged_at}")
    assert ok


def test_criterion_08_ho_rotation(acceptance):
    sol = tide.solve_harmonic(Harmonic(), S, pide.constants_from_k0(-1.0), (-4, 4), 4001, rotations=1)
    q = sol.q_grid
    bounded = not sol.diverged and np.max(np.abs(sol.chi_minus[[0, -1]])) < 1e-2 * np.max(np.abs(sol.chi_minus))
    o0, o1 = ovl(sol.chi_minus, phi(0, q), q), ovl(sol.chi_plus, phi(1, q), q)
    ok = bounded and min(o0, o1) >= 0.99
    acceptance("criterion 8 HO backward rotation", ok, f"bounded={bounded}, overlap phi0 {o0:.6f}, phi1 {o1:.6f}")
    assert ok


def test_criterion_09_hydrogen_decoupled(acceptance):
    q = np.linspace(-130, -1e-3, 20001)
    worst = 0.0
    spacing_ok = True
    for branch in Branch:
        chi = tide.decoupled_solution(Coulomb1D(), S, branch, q)
        worst = max(worst, float(np.max(np.abs(np.abs(chi) - np.abs(chi[0])))))
        # zeros of Re chi by linear interpolation, ordered by |q|
        re = chi.real
        idx = np.nonzero(np.sign(re[:-1]) != np.sign(re[1:]))[0]
        zeros = np.sort(np.abs(q[idx] - re[idx] * (q[idx + 1] - q[idx]) / (re[idx + 1] - re[idx])))
        spacing_ok &= len(zeros) >= 8 and bool(np.all(np.diff(np.diff(zeros)) > 0))
    # independent check on the phase: -sqrt(8 |q|) on q < 0 for e^2 = m = hbar = 1
    phase = np.unwrap(np.angle(tide.decoupled_solution(Coulomb1D(), S, "plus", q)))
    phase_err = float(np.max(np.abs((phase - phase[-1]) + (np.sqrt(8 * np.abs(q)) - math.sqrt(8e-3)))))
    ok = worst <= 1e-10 and spacing_ok and phase_err < 1e-9
    acceptance("criterion 9 hydrogen decoupled", ok,
               f"modulus spread {worst:.1e} (<=1e-10), zero spacings increasing={spacing_ok}, phase err {phase_err:.1e}")
    assert ok


def test_criterion_10_hydrogen_sweep(acceptance):
    run = lambda k: tide.solve_hydrogen(Coulomb1D(), S, tide.hydrogen_constants(k), 130.0, 20001)
    b = run(-0.02)
    q = b.q_grid
    i126 = int(np.argmin(np.abs(q + 126)))
    decay = max(float((np.abs(c) ** 2)[i126] / np.max(np.abs(c) ** 2)) for c in (b.chi_plus, b.chi_minus))

    b128 = run(-1.28)
    dens = np.abs(b128.chi_minus) ** 2
    peak = float(b128.q_grid[np.argmax(dens)])
    exact = tide.hydrogen_eigenstate(1, "odd", b128.q_grid) ** 2
    exact_peak = float(b128.q_grid[np.argmax(exact)])
    squeezed = abs(peak) < abs(exact_peak)

    f = run(0.02)
    fq = f.q_grid
    ratio = float(np.trapezoid(np.abs(f.chi_plus) ** 2, fq) / np.trapezoid(np.abs(f.chi_minus) ** 2, fq))
    envelope_ok = True
    for k in (0.02, 0.18, 0.5, 1.28):
        sol = f if k == 0.02 else run(k)
        d = np.abs(sol.chi_minus) ** 2
        quarters = [float(np.max(part)) for part in np.array_split(d[sol.q_grid < -10], 4)]
        envelope_ok &= min(quarters) > 0.5 * max(quarters)

    sym = 0.0
    for k in (-0.02, -0.18, -0.5, -1.28):
        sol = b if k == -0.02 else (b128 if k == -1.28 else run(k))
        scale = float(np.max(np.abs(sol.chi_minus)))
        sym = max(sym, float(np.max(np.abs(sol.chi_plus.real - sol.chi_minus.imag))) / scale,
                  float(np.max(np.abs(sol.chi_plus.imag - sol.chi_minus.real))) / scale)
    ok = decay <= 1e-4 and squeezed and envelope_ok and ratio < 0.05 and sym <= 1e-6
    acceptance("criterion 10 hydrogen sweep", ok,
               f"decay at -126 {decay:.1e} (<=1e-4), peak {peak:.3f} vs exact {exact_peak:.3f}, "
               f"F envelope non-decaying={envelope_ok}, plus/minus {ratio:.4f} (<0.05), symmetry {sym:.1e} (<=1e-6)")
    assert ok


def test_criterion_11_superposition(acceptance):
    result = scenarios.run_superposition(scenarios.ScenarioConfig("superposition-fig5"))
    per_err = result.summary["usual_period_error"]
    defect = result.summary["ml_acf_defect"]
    acceptance("criterion 11a usual-QM period", per_err <= 1e-3, f"|T - 2pi| {per_err:.2e} (<=1e-3)")
    acceptance("criterion 11b ML trace aperiodicity", defect >= 0.05,
               f"1 - r(2pi) = {defect:.4f} at q = 0.5 (need >= 0.05)")
    assert per_err <= 1e-3
    assert defect >= 0.05, "ML trace lag-2pi correlation defect below 5%"


def test_criterion_12_determinism(acceptance, tmp_path):
    mismatched = []
    for name in scenarios.SCENARIOS:
        dirs = []
        for rep in ("first", "second"):
            cfg = scenarios.ScenarioConfig(name, outdir=str(tmp_path / rep))
            scenarios.write_result(scenarios.run_scenario(cfg))
            dirs.append(os.path.join(cfg.outdir, name))
        files = sorted(os.listdir(dirs[0]))
        assert files == sorted(os.listdir(dirs[1]))
        for fn in files:
            if fn.endswith(".csv") and not filecmp.cmp(os.path.join(dirs[0], fn), os.path.join(dirs[1], fn), shallow=False):
                mismatched.append(f"{name}/{fn}")
        # manifests differ only in the recorded output directory
        for fn in (f for f in files if f.endswith(".manifest.json")):
            a = open(os.path.join(dirs[0], fn)).read().replace(str(tmp_path / "first"), "")
            b = open(os.path.join(dirs[1], fn)).read().replace(str(tmp_path / "second"), "")
            if a != b:
                mismatched.append(f"{name}/{fn}")
        # a re-run into the same directory reproduces every file byte for byte
        first = {fn: open(os.path.join(dirs[0], fn), "rb").read() for fn in files}
        scenarios.write_result(scenarios.run_scenario(scenarios.ScenarioConfig(name, outdir=str(tmp_path / "first"))))
        mismatched += [f"{name}/{fn} (rerun)" for fn in files if open(os.path.join(dirs[0], fn), "rb").read() != first[fn]]
    ok = not mismatched
    acceptance("criterion 12 determinism", ok, "all scenario outputs byte-identical" if ok else f"differ: {mismatched}")
    assert ok
