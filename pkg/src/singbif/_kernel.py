"""Compiled Dormand-Prince 5(4) integrator for bulk end-point evaluation of
the scaled radial equation (no dense output, no barrier crossing)."""

from __future__ import annotations

import math

import numpy as np
from numba import config, njit, prange

# the bundled TBB is too old and only produces a warning
config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

OK, BARRIER, FAILED = 0, 1, 2

_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1 = 71 / 57600
_E3 = -71 / 16695
_E4 = 71 / 1920
_E5 = -17253 / 339200
_E6 = 22 / 525
_E7 = -1 / 40


@njit(cache=True)
def _accel(s, y, ys):
    return -y * (2.0 + y) / (1.0 + y) - ys / s


@njit(cache=True)
def shoot_end(a, s_end, tol, y_floor):
    """Integrate y'' + y'/s = -y(2+y)/(1+y), y(0)=a, y'(0)=0 to s_end.

    Returns (y(s_end), y'(s_end), status).
    """
    g = -a * (2.0 + a) / (1.0 + a)
    dg = -(a * a + 2.0 * a + 2.0) / ((1.0 + a) * (1.0 + a))
    d = dg * g / 64.0
    s = 1e-4 * s_end
    q0 = 1.0 + a
    if q0 < 1.0 and g != 0.0:
        s = min(s, 1e-3 * math.sqrt(q0 / abs(g)))
    y = a + 0.25 * g * s * s + d * s**4
    v = 0.5 * g * s + 4.0 * d * s**3
    atol = max(1e-3 * tol * min(1.0, abs(a)), 1e-300)
    step = 0.01 * s_end
    k1y = v
    k1v = _accel(s, y, v)
    n = 0
    while s < s_end:
        n += 1
        if n > 2_000_000:
            return y, v, FAILED
        if s + step > s_end:
            step = s_end - s
        h = step
        y2 = y + h * _A21 * k1y
        v2 = v + h * _A21 * k1v
        if 1.0 + y2 <= 0.0:
            step *= 0.25
            continue
        k2y, k2v = v2, _accel(s + _C2 * h, y2, v2)
        y3 = y + h * (_A31 * k1y + _A32 * k2y)
        v3 = v + h * (_A31 * k1v + _A32 * k2v)
        if 1.0 + y3 <= 0.0:
            step *= 0.25
            continue
        k3y, k3v = v3, _accel(s + _C3 * h, y3, v3)
        y4 = y + h * (_A41 * k1y + _A42 * k2y + _A43 * k3y)
        v4 = v + h * (_A41 * k1v + _A42 * k2v + _A43 * k3v)
        if 1.0 + y4 <= 0.0:
            step *= 0.25
            continue
        k4y, k4v = v4, _accel(s + _C4 * h, y4, v4)
        y5 = y + h * (_A51 * k1y + _A52 * k2y + _A53 * k3y + _A54 * k4y)
        v5 = v + h * (_A51 * k1v + _A52 * k2v + _A53 * k3v + _A54 * k4v)
        if 1.0 + y5 <= 0.0:
            step *= 0.25
            continue
        k5y, k5v = v5, _accel(s + _C5 * h, y5, v5)
        y6 = y + h * (_A61 * k1y + _A62 * k2y + _A63 * k3y + _A64 * k4y + _A65 * k5y)
        v6 = v + h * (_A61 * k1v + _A62 * k2v + _A63 * k3v + _A64 * k4v + _A65 * k5v)
        if 1.0 + y6 <= 0.0:
            step *= 0.25
            continue
        k6y, k6v = v6, _accel(s + h, y6, v6)
        yn = y + h * (_B1 * k1y + _B3 * k3y + _B4 * k4y + _B5 * k5y + _B6 * k6y)
        vn = v + h * (_B1 * k1v + _B3 * k3v + _B4 * k4v + _B5 * k5v + _B6 * k6v)
        if 1.0 + yn <= 0.0:
            step *= 0.25
            continue
        k7y, k7v = vn, _accel(s + h, yn, vn)
        ey = h * (_E1 * k1y + _E3 * k3y + _E4 * k4y + _E5 * k5y + _E6 * k6y + _E7 * k7y)
        ev = h * (_E1 * k1v + _E3 * k3v + _E4 * k4v + _E5 * k5v + _E6 * k6v + _E7 * k7v)
        sy = atol + tol * max(abs(y), abs(yn))
        sv = atol + tol * max(abs(v), abs(vn))
        err = math.sqrt(0.5 * ((ey / sy) ** 2 + (ev / sv) ** 2))
        if err <= 1.0:
            s += h
            y, v = yn, vn
            k1y, k1v = k7y, k7v
            if y < y_floor:
                return y, v, BARRIER
            fac = 5.0 if err == 0.0 else min(5.0, 0.9 * err ** -0.2)
            step = h * fac
        else:
            step = h * max(0.2, 0.9 * err ** -0.2)
        if step < 1e-14 * max(1.0, s):
            return y, v, FAILED
    return y, v, OK


@njit(parallel=True, cache=True)
def scan_grid(a_grid, s_end, tol, y_floor):
    """End values over a grid of scaled amplitudes; row i uses s_end[i]."""
    n, m = a_grid.shape
    y_out = np.empty((n, m))
    v_out = np.empty((n, m))
    status = np.empty((n, m), dtype=np.int64)
    for idx in prange(n * m):
        i = idx // m
        j = idx % m
        a = a_grid[i, j]
        if a == 0.0 or not (1.0 + a > 0.0):
            y_out[i, j] = 0.0
            v_out[i, j] = 0.0
            status[i, j] = FAILED
            continue
        yv, vv, st = shoot_end(a, s_end[i], tol, y_floor)
        y_out[i, j] = yv
        v_out[i, j] = vv
        status[i, j] = st
    return y_out, v_out, status
