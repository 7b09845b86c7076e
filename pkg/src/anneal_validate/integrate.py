"""
Adaptive explicit Runge-Kutta integration compiled with numba.

The stepping follows scipy's ``DOP853`` (Dormand-Prince 8(5,3)) step-size
controller and uses its Butcher tableau, but the whole loop runs in compiled
code so that thousands of small (4- to 16-dimensional) trajectories stay
cheap. Right-hand sides are numba-jitted functions ``rhs(s, y, args)``.
"""

from __future__ import annotations

import numpy as np
from numba import njit
from scipy.integrate import DOP853

_A = np.ascontiguousarray(DOP853.A, dtype=np.float64)
_B = np.ascontiguousarray(DOP853.B, dtype=np.float64)
_C = np.ascontiguousarray(DOP853.C, dtype=np.float64)
_E3 = np.ascontiguousarray(DOP853.E3, dtype=np.float64)
_E5 = np.ascontiguousarray(DOP853.E5, dtype=np.float64)
_N_STAGES = DOP853.n_stages
_ERROR_EXPONENT = -1.0 / (DOP853.error_estimator_order + 1)

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0

STATUS_OK = 0
STATUS_STEP_UNDERFLOW = 1
STATUS_NOT_FINITE = 2
STATUS_MAX_STEPS = 3


class IntegrationError(RuntimeError):
    """Integrator failure, with the anneal fraction where it happened."""

    def __init__(self, message: str, s: float):
        super().__init__(f"{message} at s={s:.9g}")
        self.s = s


@njit(cache=True)
def _rms(x):
    acc = 0.0
    for i in range(x.size):
        acc += abs(x[i]) ** 2
    return np.sqrt(acc / x.size)


@njit
def _initial_step(rhs, t0, y0, f0, t1, args, rtol, atol):
    scale = atol + np.abs(y0) * rtol
    d0 = _rms(y0 / scale)
    d1 = _rms(f0 / scale)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    h0 = min(h0, t1 - t0)
    f1 = rhs(t0 + h0, y0 + h0 * f0, args)
    d2 = _rms((f1 - f0) / scale) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / 8.0)
    return min(100.0 * h0, h1, t1 - t0)


@njit
def dop853(rhs, y0, checkpoints, args, rtol, atol, max_steps):
    """Integrate from ``checkpoints[0]`` through every later checkpoint.

    Returns ``(states, status, s_fail, n_steps)`` where ``states[k]`` is the
    solution at ``checkpoints[k]``. Steps are clipped to land exactly on
    each checkpoint.
    """
    n = y0.size
    n_out = checkpoints.size
    states = np.zeros((n_out, n), dtype=y0.dtype)
    states[0] = y0
    K = np.zeros((_N_STAGES + 1, n), dtype=y0.dtype)
    ytmp = np.empty(n, dtype=y0.dtype)
    y_new = np.empty(n, dtype=y0.dtype)

    t = checkpoints[0]
    y = y0.copy()
    f = rhs(t, y, args)
    h_abs = _initial_step(rhs, t, y, f, checkpoints[n_out - 1], args, rtol, atol)
    n_steps = 0

    for k in range(1, n_out):
        t_bound = checkpoints[k]
        while t < t_bound:
            if n_steps >= max_steps:
                return states, STATUS_MAX_STEPS, t, n_steps
            min_step = 10.0 * abs(np.nextafter(t, np.inf) - t)
            if h_abs < min_step:
                h_abs = min_step
            rejected = False
            while True:
                if h_abs < min_step:
                    return states, STATUS_STEP_UNDERFLOW, t, n_steps
                t_new = t + h_abs
                if t_new > t_bound:
                    t_new = t_bound
                h = t_new - t

                K[0] = f
                for st in range(1, _N_STAGES):
                    for i in range(n):
                        acc = 0.0 * y[i]
                        for j in range(st):
                            acc += _A[st, j] * K[j, i]
                        ytmp[i] = y[i] + h * acc
                    K[st] = rhs(t + _C[st] * h, ytmp, args)
                for i in range(n):
                    acc = 0.0 * y[i]
                    for j in range(_N_STAGES):
                        acc += _B[j] * K[j, i]
                    y_new[i] = y[i] + h * acc
                f_new = rhs(t_new, y_new, args)
                K[_N_STAGES] = f_new

                e5 = 0.0
                e3 = 0.0
                for i in range(n):
                    scale = atol + max(abs(y[i]), abs(y_new[i])) * rtol
                    a5 = 0.0 * y[i]
                    a3 = 0.0 * y[i]
                    for j in range(_N_STAGES + 1):
                        a5 += _E5[j] * K[j, i]
                        a3 += _E3[j] * K[j, i]
                    e5 += abs(a5 / scale) ** 2
                    e3 += abs(a3 / scale) ** 2
                if e5 == 0.0 and e3 == 0.0:
                    error_norm = 0.0
                else:
                    error_norm = abs(h) * e5 / np.sqrt((e5 + 0.01 * e3) * n)

                if not np.isfinite(error_norm):
                    # an overflowing trial step is rejected like any other (as in scipy)
                    h_abs *= MIN_FACTOR
                    rejected = True
                    continue
                if error_norm < 1.0:
                    if error_norm == 0.0:
                        factor = MAX_FACTOR
                    else:
                        factor = min(MAX_FACTOR, SAFETY * error_norm ** _ERROR_EXPONENT)
                    if rejected:
                        factor = min(1.0, factor)
                    # a step clipped at a checkpoint says nothing about the next one
                    if t_new < t_bound or h >= h_abs:
                        h_abs *= factor
                    break
                h_abs *= max(MIN_FACTOR, SAFETY * error_norm ** _ERROR_EXPONENT)
                rejected = True

            t = t_new
            y[:] = y_new
            f = f_new
            n_steps += 1
        states[k] = y
    return states, STATUS_OK, t, n_steps


def solve(rhs, y0, checkpoints, args, rtol, atol, max_steps=50_000_000):
    """Run :func:`dop853` and raise :class:`IntegrationError` on failure."""
    checkpoints = np.asarray(checkpoints, dtype=np.float64)
    if checkpoints.ndim != 1 or checkpoints.size < 2 or np.any(np.diff(checkpoints) <= 0):
        raise ValueError("checkpoints must be a strictly increasing sequence of length >= 2")
    states, status, s_fail, n_steps = dop853(
        rhs, np.ascontiguousarray(y0), checkpoints,
        np.ascontiguousarray(args, dtype=np.float64),
        float(rtol), float(atol), int(max_steps))
    if status == STATUS_STEP_UNDERFLOW:
        raise IntegrationError("step size underflow", s_fail)
    if status == STATUS_NOT_FINITE:
        raise IntegrationError("non-finite state", s_fail)
    if status == STATUS_MAX_STEPS:
        raise IntegrationError(f"exceeded {max_steps} steps", s_fail)
    if not np.all(np.isfinite(states)):
        raise IntegrationError("non-finite state", float(checkpoints[-1]))
    return states, n_steps
