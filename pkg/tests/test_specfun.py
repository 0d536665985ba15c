import cmath
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from momentumian import specfun


def mp_ml(alpha, z, terms=400):
    mpmath.mp.dps = 40
    z = mpmath.mpc(z)
    return complex(mpmath.nsum(lambda k: z**k / mpmath.gamma(alpha * k + 1), [0, mpmath.inf]))


def disc(rng, r, n):
    return r * np.sqrt(rng.random(n)) * np.exp(2j * np.pi * rng.random(n))


def test_gamma_against_math():
    for x in np.linspace(0.05, 170, 997):
        assert specfun.lanczos_gamma(float(x)) == pytest.approx(math.gamma(float(x)), rel=1e-12)


def test_gamma_reflection_and_overflow():
    assert specfun.lanczos_gamma(-0.5) == pytest.approx(-2 * math.sqrt(math.pi), rel=1e-13)
    assert specfun.lanczos_gamma(200.0) == math.inf


def test_corrupted_gamma_is_scoped():
    before = specfun.gamma(3.3)
    with specfun.corrupted_gamma(1e-6):
        assert abs(specfun.gamma(3.3) / before - 1) > 1e-8
    assert specfun.gamma(3.3) == before


def test_erfc_against_mpmath():
    rng = np.random.default_rng(4)
    z = disc(rng, 6.0, 300)
    got = specfun.erfc_complex(z)
    mpmath.mp.dps = 30
    want = np.array([complex(mpmath.erfc(mpmath.mpc(v))) for v in z])
    np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-300)
    assert specfun.erfc_complex(complex(z[3])) == pytest.approx(want[3], rel=1e-12)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 0.75, 2.0])
def test_mittag_leffler_against_mpmath(alpha):
    rng = np.random.default_rng(5)
    for z in disc(rng, 4.0, 25):
        assert specfun.mittag_leffler(alpha, complex(z)) == pytest.approx(mp_ml(alpha, z), rel=1e-11)


def test_half_order_identity_branch_large_arguments():
    for y in (8 + 3j, -6 + 1j, 2j * 5, -9.0):
        assert specfun.mittag_leffler(0.5, y) == pytest.approx(mp_ml(0.5, y), rel=1e-10)


def test_mittag_leffler_special_values():
    assert specfun.mittag_leffler(0.5, 0.0) == 1
    assert specfun.mittag_leffler(1.0, 7.0) == pytest.approx(math.exp(7.0), rel=1e-14)
    assert specfun.mittag_leffler(2.0, -4.0) == pytest.approx(math.cos(2.0), abs=1e-13)


def test_mittag_leffler_array_matches_scalar():
    rng = np.random.default_rng(6)
    y = disc(rng, 6.0, 200)
    arr = specfun.mittag_leffler(0.5, y)
    np.testing.assert_allclose(arr, [specfun.mittag_leffler(0.5, complex(v)) for v in y], rtol=1e-13)


def test_mittag_leffler_errors():
    with pytest.raises(ValueError):
        specfun.mittag_leffler(0.7, 30.0)
    with pytest.raises(ValueError):
        specfun.mittag_leffler(0.7, 1.0, method="identity")
    with pytest.raises(specfun.MittagLefflerError) as info:
        specfun.mittag_leffler(0.5, 40.0, method="series", policy=specfun.MlEvalPolicy(series_max_terms=20))
    assert info.value.terms_used == 20


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 4), st.floats(0, 2 * math.pi))
def test_identity_consistency(r, phi):
    z = r * cmath.exp(1j * phi)
    y = cmath.sqrt(z)
    series = specfun.mittag_leffler(0.5, y, method="series")
    assert abs(series - cmath.exp(z) * specfun.erfc_complex(-y)) <= 1e-10 * max(1.0, abs(series))


def test_continuity_in_alpha():
    rng = np.random.default_rng(7)
    z = disc(rng, 2.0, 40)
    for a in (1 - 1e-6, 1 + 1e-6):
        assert np.max(np.abs(specfun.mittag_leffler(a, z) - np.exp(z))) <= 1e-4


def test_caputo_constant_and_linear():
    t = np.linspace(0, 1, 4001)
    assert np.max(np.abs(specfun.caputo_half(specfun.CaputoGrid(t, np.full_like(t, 2.5))))) <= 1e-12
    d = specfun.caputo_half(specfun.CaputoGrid(t, t.copy()))
    assert np.max(np.abs(d - 2 * np.sqrt(t / math.pi))) <= 2e-3


def test_caputo_matches_naive_history_sum():
    t = np.linspace(0, 1, 41)
    f = np.sin(2 * t) + 1j * t**3
    h = t[1]
    naive = np.zeros(len(t), dtype=complex)
    for n in range(1, len(t)):
        naive[n] = sum(((n - j) ** 0.5 - (n - j - 1) ** 0.5) * (f[j + 1] - f[j]) for j in range(n)) / (math.sqrt(h) * math.gamma(1.5))
    np.testing.assert_allclose(specfun.caputo_half(specfun.CaputoGrid(t, f)), naive, atol=1e-13)


def test_caputo_refinement_order_on_t_squared():
    errs = []
    for n in (501, 1001, 2001):
        t = np.linspace(0, 1, n)
        d = specfun.caputo_half(specfun.CaputoGrid(t, t * t))
        errs.append(np.max(np.abs(d - 2 * t**1.5 / math.gamma(2.5))))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 1.4)


def test_caputo_grid_validation():
    with pytest.raises(ValueError):
        specfun.CaputoGrid(np.linspace(0.1, 1, 10), np.zeros(10))
    with pytest.raises(ValueError):
        specfun.CaputoGrid(np.array([0, 0.1, 0.3, 0.4]), np.zeros(4))
    with pytest.raises(ValueError):
        specfun.CaputoGrid(np.linspace(0, 1, 10), np.zeros(10), alpha=0.3)
