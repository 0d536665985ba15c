"""Complex special functions for the half-order equations.

* :func:`gamma` -- Lanczos approximation for real arguments.
* :func:`erfc_complex` -- complementary error function on the complex plane,
  via Weideman's rational approximation of the Faddeeva function.
* :func:`mittag_leffler` -- ``E_alpha(y) = sum_k y**k / Gamma(alpha k + 1)``,
  with ``E_{1/2}(y) = exp(y**2) erfc(-y)`` for large ``|y|``.
* :func:`caputo_half` -- L1 discretisation of the order-1/2 Caputo derivative.
"""

from __future__ import annotations

import cmath
import contextlib
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

# g = 7, n = 9 coefficients (Godfrey); relative error ~1e-15 on the real axis.
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def lanczos_gamma(x: float) -> float:
    """Gamma function of a real argument."""
    if x < 0.5:
        # reflection
        return math.pi / (math.sin(math.pi * x) * lanczos_gamma(1.0 - x))
    if x > 171.7:
        return math.inf
    x -= 1.0
    acc = _LANCZOS_COEF[0]
    for i in range(1, len(_LANCZOS_COEF)):
        acc += _LANCZOS_COEF[i] / (x + i)
    t = x + _LANCZOS_G + 0.5
    half_power = t ** (0.5 * (x + 0.5))  # split to avoid overflow near x ~ 171
    return math.sqrt(2.0 * math.pi) * half_power * (half_power * math.exp(-t)) * acc


# Indirection so the self-test can swap in a deliberately broken gamma.
gamma = lanczos_gamma


@contextlib.contextmanager
def corrupted_gamma(rel_error: float = 1e-6) -> Iterator[None]:
    """Temporarily perturb :func:`gamma` by a relative error (negative control)."""
    global gamma
    saved = gamma
    gamma = lambda x: saved(x) * (1.0 + rel_error * math.sin(7.0 * x + 1.0))
    try:
        yield
    finally:
        gamma = saved


# ---------------------------------------------------------------------------
# complex erfc


def _weideman_coefficients(n: int) -> tuple[float, np.ndarray]:
    m = 2 * n
    m2 = 2 * m
    k = np.arange(-m + 1, m)
    length = math.sqrt(n / math.sqrt(2.0))
    theta = k * math.pi / m
    t = length * np.tan(theta / 2)
    f = np.exp(-t * t) * (length**2 + t * t)
    f = np.concatenate(([0.0], f))
    a = np.real(np.fft.fft(np.fft.fftshift(f))) / m2
    return length, a[1 : n + 1][::-1].copy()


_W_N = 40
_W_L, _W_COEF = _weideman_coefficients(_W_N)
_SQRT_PI = math.sqrt(math.pi)


def _faddeeva_upper(z: complex) -> complex:
    """Faddeeva ``w(z) = exp(-z**2) erfc(-i z)`` for ``Im z >= 0``."""
    lz = _W_L - 1j * z
    big_z = (_W_L + 1j * z) / lz
    p = 0j
    for c in _W_COEF:
        p = p * big_z + c
    return 2.0 * p / (lz * lz) + (1.0 / _SQRT_PI) / lz


def _erfc_scalar(z: complex) -> complex:
    z = complex(z)
    if z.real >= 0.0:
        # erfc(z) = exp(-z^2) w(i z), and i z lies in the upper half plane
        return cmath.exp(-z * z) * _faddeeva_upper(1j * z)
    return 2.0 - _erfc_scalar(-z)


def erfc_complex(z):
    """Complementary error function of complex argument.

    Relative accuracy is about 1e-13 for ``|z| <= 10`` away from the zeros
    of ``erfc`` in the left half plane.
    """
    if np.ndim(z) == 0:
        return _erfc_scalar(complex(z))
    z = np.asarray(z, dtype=complex)
    right = z.real >= 0.0
    za = np.where(right, z, -z)
    val = np.exp(-za * za) * _faddeeva_upper(1j * za)
    return np.where(right, val, 2.0 - val)


# ---------------------------------------------------------------------------
# Mittag-Leffler


class MittagLefflerError(ArithmeticError):
    def __init__(self, message: str, terms_used: int):
        super().__init__(f"{message} (terms used: {terms_used})")
        self.terms_used = terms_used


@dataclass(frozen=True)
class MlEvalPolicy:
    series_max_terms: int = 200
    series_radius: float = 5.0
    tolerance: float = 1e-13
    # For alpha = 1/2 the series cancels badly once |y| grows (the sum of
    # moduli is ~exp(|y|^2)), so the erfc form takes over beyond this radius.
    identity_radius: float = 2.0

    def __post_init__(self) -> None:
        if self.series_max_terms < 10:
            raise ValueError("series_max_terms must be >= 10")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")


DEFAULT_POLICY = MlEvalPolicy()


def mittag_leffler_series(alpha: float, y: complex, policy: MlEvalPolicy = DEFAULT_POLICY) -> complex:
    """Direct summation of ``sum_k y**k / Gamma(alpha k + 1)``."""
    y = complex(y)
    total = 1.0 + 0j
    power = 1.0 + 0j
    small = 0
    for k in range(1, policy.series_max_terms):
        power *= y
        term = power / gamma(alpha * k + 1.0)
        total += term
        # two consecutive negligible terms: the alpha=1/2 series interleaves
        # two geometric-like chains
        if abs(term) <= policy.tolerance * max(abs(total), 1e-300):
            small += 1
            if small >= 2:
                return total
        else:
            small = 0
    raise MittagLefflerError(
        f"Mittag-Leffler series did not converge for alpha={alpha}, |y|={abs(y):.3g}",
        policy.series_max_terms,
    )


def _series_array(alpha: float, y: np.ndarray, policy: MlEvalPolicy) -> np.ndarray:
    total = np.ones_like(y)
    power = np.ones_like(y)
    small = np.zeros(y.shape, dtype=int)
    for k in range(1, policy.series_max_terms):
        power = power * y
        term = power / gamma(alpha * k + 1.0)
        total = total + term
        small = np.where(np.abs(term) <= policy.tolerance * np.maximum(np.abs(total), 1e-300), small + 1, 0)
        if np.all(small >= 2):
            return total
    raise MittagLefflerError(
        f"Mittag-Leffler series did not converge for alpha={alpha}, max |y|={np.max(np.abs(y)):.3g}",
        policy.series_max_terms,
    )


def mittag_leffler_half_identity(y):
    """``E_{1/2}(y) = exp(y**2) erfc(-y)``."""
    if np.ndim(y) == 0:
        y = complex(y)
        return cmath.exp(y * y) * _erfc_scalar(-y)
    y = np.asarray(y, dtype=complex)
    return np.exp(y * y) * erfc_complex(-y)


def mittag_leffler(
    alpha: float,
    y,
    policy: MlEvalPolicy = DEFAULT_POLICY,
    method: str = "auto",
):
    """Mittag-Leffler function ``E_alpha(y)``.

    ``method`` is ``"auto"``, ``"series"`` or ``"identity"`` (``alpha = 1/2``
    only).  In auto mode ``alpha = 1/2`` switches to the erfc identity for
    ``|y| > policy.identity_radius``, ``alpha = 1`` to ``exp`` beyond the
    series radius, and any other ``alpha`` is limited to the series radius.
    Arrays are evaluated in bulk.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if method not in ("auto", "series", "identity"):
        raise ValueError(f"unknown method {method!r}")
    half = alpha == 0.5
    if method == "identity" and not half:
        raise ValueError("the erfc identity only holds for alpha = 1/2")
    if np.ndim(y) != 0:
        return _mittag_leffler_array(alpha, np.asarray(y, dtype=complex), policy, method)
    y = complex(y)
    if method == "identity":
        return mittag_leffler_half_identity(y)
    if method == "series":
        return mittag_leffler_series(alpha, y, policy)
    if half:
        if abs(y) > min(policy.identity_radius, policy.series_radius):
            return mittag_leffler_half_identity(y)
        return mittag_leffler_series(alpha, y, policy)
    if abs(y) <= policy.series_radius:
        return mittag_leffler_series(alpha, y, policy)
    if alpha == 1.0:
        return cmath.exp(y)
    raise ValueError(
        f"|y|={abs(y):.3g} exceeds the series radius {policy.series_radius} "
        f"and no large-argument form is available for alpha={alpha}"
    )


def _mittag_leffler_array(alpha: float, y: np.ndarray, policy: MlEvalPolicy, method: str) -> np.ndarray:
    if method == "identity":
        return mittag_leffler_half_identity(y)
    if method == "series":
        return _series_array(alpha, y, policy)
    out = np.empty_like(y)
    mag = np.abs(y)
    if alpha == 0.5:
        far = mag > min(policy.identity_radius, policy.series_radius)
        if np.any(far):
            out[far] = mittag_leffler_half_identity(y[far])
    else:
        far = mag > policy.series_radius
        if np.any(far):
            if alpha != 1.0:
                raise ValueError(
                    f"max |y|={np.max(mag):.3g} exceeds the series radius {policy.series_radius} "
                    f"and no large-argument form is available for alpha={alpha}"
                )
            out[far] = np.exp(y[far])
    near = ~far
    if np.any(near):
        out[near] = _series_array(alpha, y[near], policy)
    return out


# ---------------------------------------------------------------------------
# Caputo derivative of order 1/2


@dataclass(frozen=True)
class CaputoGrid:
    t_grid: np.ndarray
    f_values: np.ndarray
    alpha: float = 0.5

    def __post_init__(self) -> None:
        t = np.asarray(self.t_grid, dtype=float)
        f = np.asarray(self.f_values)
        if self.alpha != 0.5:
            raise ValueError("only the order-1/2 Caputo derivative is supported")
        if t.ndim != 1 or len(t) < 3:
            raise ValueError("t_grid needs at least 3 points")
        if f.shape != t.shape:
            raise ValueError("f_values must match t_grid")
        if t[0] != 0.0:
            raise ValueError("t_grid must start at 0")
        step = np.diff(t)
        h = (t[-1] - t[0]) / (len(t) - 1)
        if h <= 0 or np.max(np.abs(step - h)) > 1e-9 * max(h, 1.0):
            raise ValueError("t_grid must be uniform and increasing")


def l1_weights(n: int, alpha: float = 0.5) -> np.ndarray:
    j = np.arange(n + 1, dtype=float)
    return j[1:] ** (1.0 - alpha) - j[:-1] ** (1.0 - alpha)


def caputo_half(grid: CaputoGrid) -> np.ndarray:
    """L1 scheme for the Caputo derivative of order 1/2 on a uniform grid.

    ``D f(t_n) ~ h**-a / Gamma(2-a) * sum_{j<n} b_j (f_{n-j} - f_{n-j-1})``
    with ``b_j = (j+1)**(1-a) - j**(1-a)``.  The first sample is 0.
    """
    alpha = grid.alpha
    t = np.asarray(grid.t_grid, dtype=float)
    f = np.asarray(grid.f_values)
    n = len(t) - 1
    h = (t[-1] - t[0]) / n
    df = np.diff(f)
    b = l1_weights(n, alpha)
    history = np.convolve(b, df)[:n]
    out = np.zeros(len(t), dtype=np.result_type(f.dtype, float))
    out[1:] = history * (h ** (-alpha) / gamma(2.0 - alpha))
    return out
