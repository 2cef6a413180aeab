"""Explicit ODE integration: adaptive Dormand-Prince 5(4) and fixed-step Euler.

The adaptive path uses PI step-size control and clamps steps so every
requested output time is hit exactly (no dense-output interpolation error at
the samples). A fixed-step mode runs the same tableau without error control,
which is what the order-convergence tests exercise.
"""

from __future__ import annotations

import numpy as np

from .errors import SolverDiverged

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
_E = _B5 - _B4

_SAFETY = 0.9
_PI_ALPHA = 0.17  # error exponent
_PI_BETA = 0.04  # previous-error exponent
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0


def _dopri_step(f, t, y, h, k1):
    """One Dormand-Prince step. Returns (y5, error_estimate, k7)."""
    k = [k1]
    for i in range(1, 7):
        yi = y + h * sum(a * kj for a, kj in zip(_A[i], k))
        k.append(f(t + _C[i] * h, yi))
    y5 = yi  # stage 7 input is the 5th-order solution (FSAL)
    err = h * sum(e * kj for e, kj in zip(_E, k))
    return y5, err, k[6]


def _initial_step(f, t0, y0, f0, rtol, atol):
    scale = atol + rtol * np.abs(y0)
    d0 = np.linalg.norm(y0 / scale) / np.sqrt(y0.size)
    d1 = np.linalg.norm(f0 / scale) / np.sqrt(y0.size)
    if d0 < 1e-5 or d1 < 1e-5:
        return 1e-6
    return 0.01 * d0 / d1


def integrate_dopri(
    f,
    t0: float,
    y0: np.ndarray,
    eval_times: np.ndarray,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    max_step: float = np.inf,
    first_step: float | None = None,
) -> np.ndarray:
    """Integrate y' = f(t, y), returning y at each eval time.

    eval_times must be non-decreasing with eval_times[0] >= t0; every output
    time is the exact endpoint of an accepted step.
    """
    y0 = np.asarray(y0, dtype=np.float64)
    eval_times = np.asarray(eval_times, dtype=np.float64)
    out = np.empty((eval_times.size, y0.size))
    t, y = float(t0), y0.copy()
    k1 = np.asarray(f(t, y), dtype=np.float64)
    h_prop = first_step if first_step is not None else _initial_step(f, t, y, k1, rtol, atol)
    h_prop = min(h_prop, max_step)
    err_prev = 1.0
    sqrt_n = np.sqrt(y0.size)
    for i, target in enumerate(eval_times):
        if target < t - 1e-12 * max(1.0, abs(t)):
            raise ValueError("eval_times must be non-decreasing and >= t0")
        while t < target:
            clamped = h_prop > target - t
            h = min(h_prop, target - t, max_step)
            if h < 1e-14 * max(1.0, abs(t)):
                raise SolverDiverged(f"step size underflow at t={t}")
            y_new, err_vec, k7 = _dopri_step(f, t, y, h, k1)
            if not np.all(np.isfinite(y_new)):
                h_prop = h / 2
                continue
            scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
            err = np.linalg.norm(err_vec / scale) / sqrt_n
            if err <= 1.0:
                t += h
                y = y_new
                k1 = k7
                factor = _SAFETY * max(err, 1e-10) ** -_PI_ALPHA * err_prev ** _PI_BETA
                factor = min(_MAX_FACTOR, max(_MIN_FACTOR, factor))
                if not clamped:
                    h_prop = min(h * factor, max_step)
                err_prev = max(err, 1e-10)
            else:
                h_prop = h * max(_MIN_FACTOR, _SAFETY * err ** -_PI_ALPHA)
        out[i] = y
    return out


def integrate_fixed(
    f,
    t0: float,
    y0: np.ndarray,
    eval_times: np.ndarray,
    step: float,
    method: str = "dopri",
) -> np.ndarray:
    """Fixed-step integration ('dopri' tableau without error control, or 'euler').

    Steps of the given size are taken and shortened as needed to land exactly
    on each eval time.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    y0 = np.asarray(y0, dtype=np.float64)
    eval_times = np.asarray(eval_times, dtype=np.float64)
    out = np.empty((eval_times.size, y0.size))
    t, y = float(t0), y0.copy()
    k1 = np.asarray(f(t, y), dtype=np.float64) if method == "dopri" else None
    for i, target in enumerate(eval_times):
        while t < target - 1e-12 * max(1.0, abs(target)):
            h = min(step, target - t)
            if method == "dopri":
                y, _, k1 = _dopri_step(f, t, y, h, k1)
            elif method == "euler":
                y = y + h * np.asarray(f(t, y))
            else:
                raise ValueError(f"unknown method {method!r}")
            if not np.all(np.isfinite(y)):
                raise SolverDiverged(f"non-finite state at t={t + h}")
            t += h
        t = target
        out[i] = y
    return out
