"""Adaptive Dormand-Prince 5(4) for small complex first-order systems.

The right-hand side works on plain Python complex scalars (the systems here
have two components, where numpy call overhead would dominate).  Steps are
shortened to land exactly on each requested output abscissa.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

# Butcher tableau
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
# b - b* (fifth minus embedded fourth order)
_E1 = 71 / 57600
_E3 = -71 / 16695
_E4 = 71 / 1920
_E5 = -17253 / 339200
_E6 = 22 / 525
_E7 = -1 / 40


@dataclass(frozen=True)
class StepPolicy:
    initial_step: float = 1e-3
    rtol: float = 1e-10
    atol: float = 1e-300
    divergence_threshold: float = 1e150
    max_steps: int = 2_000_000

    def __post_init__(self) -> None:
        if not self.initial_step > 0:
            raise ValueError("initial_step must be positive")
        if not (self.rtol > 0 and self.atol >= 0):
            raise ValueError("tolerances must be positive")
        if not self.divergence_threshold > 1:
            raise ValueError("divergence_threshold must exceed 1")


@dataclass
class IntegrationResult:
    x: np.ndarray
    y: np.ndarray  # shape (len(x), dim)
    status: str  # "converged" or "diverged"
    x_reached: float
    steps: int
    rejected: int


RHS = Callable[[float, Sequence[complex]], Sequence[complex]]


def _norm(y: Sequence[complex]) -> float:
    return max(abs(v) for v in y)


def dopri45(rhs: RHS, y0: Sequence[complex], x_out: np.ndarray, policy: StepPolicy = StepPolicy()) -> IntegrationResult:
    """Integrate ``y' = rhs(x, y)`` from ``x_out[0]`` through every ``x_out[i]``.

    ``x_out`` must be strictly monotone; integration runs in its direction.
    The run halts when ``max|y|`` exceeds ``divergence_threshold`` times the
    seed norm.
    """
    xs = np.asarray(x_out, dtype=float)
    if xs.ndim != 1 or len(xs) < 2:
        raise ValueError("x_out needs at least 2 points")
    d = np.diff(xs)
    if not (np.all(d > 0) or np.all(d < 0)):
        raise ValueError("x_out must be strictly monotone")
    direction = 1.0 if d[0] > 0 else -1.0
    y = [complex(v) for v in y0]
    dim = len(y)
    seed = _norm(y)
    limit = policy.divergence_threshold * (seed if seed > 0 else 1.0)
    out = np.full((len(xs), dim), np.nan + 0j)
    out[0] = y
    x = float(xs[0])
    h = min(policy.initial_step, abs(d[0]))
    rtol, atol = policy.rtol, policy.atol
    k1 = list(rhs(x, y))
    steps = rejected = 0
    idx = 1
    status = "converged"
    while idx < len(xs):
        target = float(xs[idx])
        remaining = abs(target - x)
        last = h >= remaining
        hs = remaining if last else h
        sh = direction * hs
        if steps + rejected > policy.max_steps:
            raise RuntimeError("step budget exhausted")

        yt = [y[i] + sh * _A21 * k1[i] for i in range(dim)]
        k2 = rhs(x + _C2 * sh, yt)
        yt = [y[i] + sh * (_A31 * k1[i] + _A32 * k2[i]) for i in range(dim)]
        k3 = rhs(x + _C3 * sh, yt)
        yt = [y[i] + sh * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i]) for i in range(dim)]
        k4 = rhs(x + _C4 * sh, yt)
        yt = [y[i] + sh * (_A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i] + _A54 * k4[i]) for i in range(dim)]
        k5 = rhs(x + _C5 * sh, yt)
        yt = [
            y[i] + sh * (_A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i] + _A64 * k4[i] + _A65 * k5[i])
            for i in range(dim)
        ]
        x_new = target if last else x + sh
        k6 = rhs(x + sh, yt)
        y_new = [
            y[i] + sh * (_B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i] + _B5 * k5[i] + _B6 * k6[i])
            for i in range(dim)
        ]
        k7 = rhs(x_new, y_new)
        scale = atol + rtol * max(_norm(y), _norm(y_new))
        err = max(
            abs(sh * (_E1 * k1[i] + _E3 * k3[i] + _E4 * k4[i] + _E5 * k5[i] + _E6 * k6[i] + _E7 * k7[i]))
            for i in range(dim)
        ) / scale
        if not math.isfinite(err):
            err = math.inf

        if err <= 1.0:
            steps += 1
            x, y, k1 = x_new, y_new, list(k7)
            if last:
                out[idx] = y
                idx += 1
            if _norm(y) > limit:
                status = "diverged"
                break
            fac = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            # a step cut short to hit an output point says nothing about h
            h = max(h, hs * fac) if last else hs * fac
        else:
            rejected += 1
            h = hs * max(0.1, 0.9 * err ** -0.2)
            if h < 1e-14 * max(1.0, abs(x)):
                status = "diverged"
                break
    n = idx
    return IntegrationResult(xs[:n], out[:n], status, x, steps, rejected)
