"""Compiled fixed-step RK4 loops for the order-reduced equation of motion.

    dx/dt = p / m
    dp/dt = f(x) + tau * J(x) p / m + e E(t)

The field is supplied pre-sampled on the half-step grid ``t0 + j dt/2``
(``2 n_steps + 1`` rows), so every RK4 stage sees the exact drive.
"""

import numpy as np
from numba import njit

# Accumulator slots for window averages.
ACC_FIELDS = ("H", "x", "p", "x2", "p2", "absorbed", "radiated")


@njit(cache=True, nogil=True)
def _poly(c, x):
    v = 0.0
    for k in range(c.size - 1, -1, -1):
        v = v * x + c[k]
    return v


@njit(cache=True, nogil=True)
def _dpoly(c, x):
    v = 0.0
    for k in range(c.size - 1, 0, -1):
        v = v * x + k * c[k]
    return v


@njit(cache=True, nogil=True)
def _potential(c, x):
    # V = -sum_k c_k x^(k+1)/(k+1)
    v = 0.0
    for k in range(c.size - 1, -1, -1):
        v = v * x - c[k] / (k + 1)
    return v * x


@njit(cache=True, nogil=True)
def _deriv(x, p, c, mass, tau, eE, dx, dp):
    for i in range(x.size):
        v = p[i] / mass
        dx[i] = v
        dp[i] = _poly(c, x[i]) + tau * _dpoly(c, x[i]) * v + eE[i]


@njit(cache=True, nogil=True)
def rk4_poly(x0, p0, c, mass, tau, charge, field, dt, n_steps, stride, w_start, xs, ps, acc):
    """Integrate; return the first non-finite step index or -1.

    ``xs``/``ps`` receive every ``stride``-th state (row ``n // stride``).
    ``acc`` accumulates window sums over steps ``n >= w_start``; ``acc[-1]``
    is the sample count.
    """
    d = x0.size
    x = x0.copy()
    p = p0.copy()
    k1x = np.empty(d); k1p = np.empty(d)
    k2x = np.empty(d); k2p = np.empty(d)
    k3x = np.empty(d); k3p = np.empty(d)
    k4x = np.empty(d); k4p = np.empty(d)
    xt = np.empty(d); pt = np.empty(d)
    eE = np.empty(d)
    h2 = 0.5 * dt
    for n in range(n_steps + 1):
        if n % stride == 0:
            r = n // stride
            for i in range(d):
                xs[r, i] = x[i]
                ps[r, i] = p[i]
        if n >= w_start:
            H = 0.0; sx = 0.0; sp = 0.0; sx2 = 0.0; sp2 = 0.0; ab = 0.0; rad = 0.0
            for i in range(d):
                v = p[i] / mass
                H += 0.5 * p[i] * v + _potential(c, x[i])
                sx += x[i]
                sp += p[i]
                sx2 += x[i] * x[i]
                sp2 += p[i] * p[i]
                ab += charge * v * field[2 * n, i]
                rad += tau * _dpoly(c, x[i]) * v * v
            acc[0] += H; acc[1] += sx; acc[2] += sp; acc[3] += sx2
            acc[4] += sp2; acc[5] += ab; acc[6] += rad; acc[7] += 1.0
        if n == n_steps:
            break
        for i in range(d):
            eE[i] = charge * field[2 * n, i]
        _deriv(x, p, c, mass, tau, eE, k1x, k1p)
        for i in range(d):
            xt[i] = x[i] + h2 * k1x[i]
            pt[i] = p[i] + h2 * k1p[i]
            eE[i] = charge * field[2 * n + 1, i]
        _deriv(xt, pt, c, mass, tau, eE, k2x, k2p)
        for i in range(d):
            xt[i] = x[i] + h2 * k2x[i]
            pt[i] = p[i] + h2 * k2p[i]
        _deriv(xt, pt, c, mass, tau, eE, k3x, k3p)
        for i in range(d):
            xt[i] = x[i] + dt * k3x[i]
            pt[i] = p[i] + dt * k3p[i]
            eE[i] = charge * field[2 * n + 2, i]
        _deriv(xt, pt, c, mass, tau, eE, k4x, k4p)
        bad = False
        for i in range(d):
            x[i] += dt / 6.0 * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i])
            p[i] += dt / 6.0 * (k1p[i] + 2.0 * k2p[i] + 2.0 * k3p[i] + k4p[i])
            if not (np.isfinite(x[i]) and np.isfinite(p[i])):
                bad = True
        if bad:
            return n + 1
    return -1


def rk4_callable(x0, p0, force, jacobian, mass, tau, charge, field, dt, n_steps, stride, w_start, xs, ps, acc, potential):
    """Pure-Python twin of :func:`rk4_poly` for arbitrary force callables."""
    x = np.array(x0, dtype=float)
    p = np.array(p0, dtype=float)

    def deriv(x, p, E):
        v = p / mass
        return v, force(x) + tau * (jacobian(x) @ v) + charge * E

    h2 = 0.5 * dt
    for n in range(n_steps + 1):
        if n % stride == 0:
            xs[n // stride] = x
            ps[n // stride] = p
        if n >= w_start:
            v = p / mass
            acc[0] += 0.5 * p @ v + (potential(x) if potential is not None else np.nan)
            acc[1] += x.sum()
            acc[2] += p.sum()
            acc[3] += x @ x
            acc[4] += p @ p
            acc[5] += charge * v @ field[2 * n]
            acc[6] += tau * v @ (jacobian(x) @ v)
            acc[7] += 1.0
        if n == n_steps:
            break
        k1x, k1p = deriv(x, p, field[2 * n])
        k2x, k2p = deriv(x + h2 * k1x, p + h2 * k1p, field[2 * n + 1])
        k3x, k3p = deriv(x + h2 * k2x, p + h2 * k2p, field[2 * n + 1])
        k4x, k4p = deriv(x + dt * k3x, p + dt * k3p, field[2 * n + 2])
        x = x + dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
        p = p + dt / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p)
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(p))):
            return n + 1
    return -1
