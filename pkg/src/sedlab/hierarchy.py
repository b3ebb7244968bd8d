"""Expansion of the trajectory in powers of the charge.

    x = x0 + x1 + x2 + ...

``x0`` is the undriven, radiatively damped motion; ``x1`` the linear response
to the field through the Green function of the force linearized about an
expansion point; ``x2`` the response to the quadratic source
``(1/2) f''(x0) x1 x1``.

Green kernels are time-invariant (fixed expansion point), so every response
is a causal convolution on a uniform grid, done here with composite Simpson
weights and FFTs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.signal import fftconvolve

from .dynamics import ForceModel, Trajectory, energy_series, integrate_bm
from .errors import GridMismatch, MissingJacobian, MissingSecondDerivative
from .units import PhysicalScale
from .zpf import FieldModeSet, sample_field


def causal_convolve(kernel, source, h):
    """``y_j = int_0^{j h} K(j h - s) f(s) ds`` for samples ``K_j``, ``f_j``.

    Composite Simpson for even ``j``; Simpson plus a closing 3/8 panel for odd
    ``j >= 3``; trapezoid for ``j = 1``.  Fourth order in ``h``.
    """
    K = np.asarray(kernel, dtype=float)
    f = np.asarray(source, dtype=float)
    n = f.size
    if K.size < n:
        raise GridMismatch("kernel table shorter than source")
    K = K[:n]
    if n == 0:
        return np.zeros(0)
    if not np.any(f) or not np.any(K):
        return np.zeros(n)
    b = np.where(np.arange(n) % 2 == 1, 4.0, 2.0)
    b[0] = 1.0
    y = (h / 3) * fftconvolve(K, b * f)[:n]
    y[0] = 0.0
    if n > 1:
        y[1] = 0.5 * h * (K[1] * f[0] + K[0] * f[1])
    j = np.arange(2, n, 2)
    y[j] -= (h / 3) * K[0] * f[j]
    j = np.arange(3, n, 2)
    if j.size:
        y[j] += h * (
            (3 / 8 - 1 / 3) * K[3] * f[j - 3]
            + (9 / 8 - 4 / 3) * K[2] * f[j - 2]
            + (9 / 8 - 2 / 3) * K[1] * f[j - 1]
            + (3 / 8 - 4 / 3) * K[0] * f[j]
        )
    return y


@dataclass(frozen=True, eq=False)
class GreenKernel:
    """Response ``G_ik(t, s) = dx_i(t)/dp_k(s)`` of the linearized dynamics.

    ``G(t, s)`` depends only on ``t - s`` and vanishes for ``t < s``.  The
    momentum kernel ``P = m dG/dt`` gives ``dp_i(t)/dp_k(s)``.  ``damping`` is
    the coefficient multiplying ``J x'`` in the linearized equation: zero for
    the bare kernel, ``tau`` when radiation reaction is kept.
    """

    scale: PhysicalScale
    jacobian: np.ndarray  # (d, d)
    expansion_point: np.ndarray
    representation: str  # "closed_form_sho" | "numeric"
    damping: float = 0.0
    omega0: Optional[float] = None
    max_lag: float = math.inf
    _table: tuple = field(default=None, repr=False)

    @property
    def dimension(self) -> int:
        return self.jacobian.shape[0]

    def _lags(self, u):
        u = np.asarray(u, dtype=float)
        if np.any(u > self.max_lag * (1 + 1e-12)):
            raise GridMismatch(f"lag {u.max():g} beyond tabulated range {self.max_lag:g}")
        return u

    def _closed(self, u):
        m = self.scale.mass
        w0 = self.omega0
        g = self.damping * w0**2
        wd = math.sqrt(w0**2 - g**2 / 4)
        env = np.exp(-0.5 * g * u)
        s, c = np.sin(wd * u), np.cos(wd * u)
        G = env * s / (m * wd)
        P = env * (c - 0.5 * g / wd * s)
        return G, P

    def lag_values(self, u):
        """``(G(u), P(u))`` at lags ``u >= 0``, each shaped ``u.shape + (d, d)``."""
        u = self._lags(u)
        d = self.dimension
        if self.representation == "closed_form_sho":
            G, P = self._closed(u)
            eye = np.eye(d)
            return G[..., None, None] * eye, P[..., None, None] * eye
        gs, ps = self._table
        G = gs(u).reshape(u.shape + (d, d))
        P = self.scale.mass * ps(u).reshape(u.shape + (d, d))
        return G, P

    def __call__(self, t, s):
        t, s = np.broadcast_arrays(np.asarray(t, float), np.asarray(s, float))
        u = t - s
        G, _ = self.lag_values(np.where(u > 0, u, 0.0))
        return np.where((u > 0)[..., None, None], G, 0.0)

    def momentum(self, t, s):
        t, s = np.broadcast_arrays(np.asarray(t, float), np.asarray(s, float))
        u = t - s
        _, P = self.lag_values(np.where(u >= 0, u, 0.0))
        return np.where((u >= 0)[..., None, None], P, 0.0)

    def sampled(self, h, n):
        """Kernel grids for export: dict of lags, G and P."""
        u = h * np.arange(n)
        G, P = self.lag_values(u)
        return {"lag": u, "G": G, "P": P}


def _tabulate(jac, mass, damping, max_lag, step):
    """RK4 on ``m Y'' = J Y + damping J Y'``, ``Y(0) = 0``, ``Y'(0) = I/m``."""
    d = jac.shape[0]
    A = np.zeros((2 * d, 2 * d))
    A[:d, d:] = np.eye(d)
    A[d:, :d] = jac / mass
    A[d:, d:] = damping * jac / mass
    n = int(math.ceil(max_lag / step))
    h = max_lag / n
    hA = h * A
    # One RK4 step of a linear constant system is this exact polynomial.
    R = np.eye(2 * d) + hA + hA @ hA / 2 + hA @ hA @ hA / 6 + hA @ hA @ hA @ hA / 24
    Y = np.empty((n + 1, 2 * d, d))
    Y[0, :d] = 0.0
    Y[0, d:] = np.eye(d) / mass
    for k in range(n):
        Y[k + 1] = R @ Y[k]
    u = h * np.arange(n + 1)
    G = Y[:, :d].reshape(n + 1, d * d)
    V = Y[:, d:].reshape(n + 1, d * d)
    acc = np.einsum("ij,njk->nik", A[d:, :d], Y[:, :d]) + np.einsum("ij,njk->nik", A[d:, d:], Y[:, d:])
    acc = acc.reshape(n + 1, d * d)
    return CubicHermiteSpline(u, G, V, axis=0), CubicHermiteSpline(u, V, acc, axis=0)


def build_green_kernel(
    scale: PhysicalScale,
    force: ForceModel,
    expansion_point=None,
    *,
    representation="auto",
    include_damping=False,
    max_lag=None,
    step=None,
) -> GreenKernel:
    """Green kernel of the force linearized at ``expansion_point`` (default: origin).

    ``representation="auto"`` picks the closed form for harmonic forces and a
    tabulated RK4 solution otherwise.  With ``include_damping`` the
    order-reduced radiation-reaction term is kept in the linear operator.

    Raises
    ------
    MissingJacobian
    """
    if not force.has_jacobian:
        raise MissingJacobian("Green kernel needs the force jacobian")
    d = force.dimension
    x = np.zeros(d) if expansion_point is None else np.asarray(expansion_point, float).reshape(d)
    jac = np.asarray(force.jacobian(x), float).reshape(d, d)
    damping = scale.tau if include_damping else 0.0
    if representation == "auto":
        representation = "closed_form_sho" if force.kind == "harmonic" else "numeric"
    if representation == "closed_form_sho":
        if force.kind != "harmonic":
            raise ValueError("closed form exists only for harmonic forces")
        return GreenKernel(scale, jac, x, representation, damping, force.omega0)
    if representation != "numeric":
        raise ValueError(f"unknown representation {representation!r}")
    w = math.sqrt(max(np.max(np.abs(np.linalg.eigvals(jac))), 1e-30) / scale.mass)
    if max_lag is None:
        max_lag = 20 * math.pi / w
    if step is None:
        step = 2 * math.pi / (400 * w)
    table = _tabulate(jac, scale.mass, damping, float(max_lag), float(step))
    return GreenKernel(scale, jac, x, "numeric", damping, None, float(max_lag), table)


def _grid_step(t_grid):
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size < 2:
        raise GridMismatch("time grid must be 1-D with at least two points")
    h = (t[-1] - t[0]) / (t.size - 1)
    if not h > 0 or np.max(np.abs(np.diff(t) - h)) > 1e-9 * max(1.0, abs(h)):
        raise GridMismatch("time grid must be uniform and increasing")
    return t, h


def _burn_index(t, h, t_burn):
    if t_burn is None:
        return 0
    j = (t_burn - t[0]) / h
    k = int(round(j))
    if abs(j - k) > 1e-6 or k < 0 or k >= t.size:
        raise GridMismatch(f"t_burn={t_burn!r} is not a point of the grid")
    return k


def _convolve_matrix(K, src, h):
    """``y_i = sum_k conv(K_ik, src_k)`` for ``K`` of shape ``(n, d, d)``, ``src`` ``(n, d)``."""
    n, d = src.shape
    y = np.zeros((n, d))
    for i in range(d):
        for k in range(d):
            if np.any(K[:, i, k]):
                y[:, i] += causal_convolve(K[:, i, k], src[:, k], h)
    return y


def first_order_response(kernel: GreenKernel, modes: FieldModeSet, t_grid, t_burn=None):
    """Field-driven response ``(x1, p1)`` on ``t_grid``, each shaped ``(n, d)``.

    ``x1(t) = e int_{t_burn}^t G(t, s) E(s) ds`` and ``p1`` uses the momentum
    kernel in the same integral.  Points before ``t_burn`` are zero.

    Raises
    ------
    GridMismatch
        Non-uniform grid, ``t_burn`` off the grid, or lags beyond a tabulated
        kernel's range.
    """
    t, h = _grid_step(t_grid)
    d = kernel.dimension
    k0 = _burn_index(t, h, t_burn)
    n = t.size - k0
    x1 = np.zeros((t.size, d))
    p1 = np.zeros((t.size, d))
    if modes is None:
        return x1, p1
    if modes.components != d:
        raise GridMismatch(f"field has {modes.components} components, kernel has {d}")
    E = kernel.scale.charge * sample_field(modes, t[k0], h, n)
    G, P = kernel.lag_values(h * np.arange(n))
    x1[k0:] = _convolve_matrix(G, E, h)
    p1[k0:] = _convolve_matrix(P, E, h)
    return x1, p1


def second_order_response(
    scale: PhysicalScale,
    force: ForceModel,
    x0_traj,
    x1_series,
    t_grid,
    *,
    kernel: Optional[GreenKernel] = None,
    t_burn=None,
):
    """Response to the source ``(1/2) f''_ijk(x0) x1_j x1_k`` with zero initial data.

    ``x0_traj`` is the zeroth-order path on ``t_grid`` (array or
    :class:`Trajectory`).  ``kernel`` defaults to the bare kernel at the origin.

    Raises
    ------
    MissingSecondDerivative
    """
    if not force.has_hessian:
        raise MissingSecondDerivative("second-order response needs f''")
    t, h = _grid_step(t_grid)
    d = force.dimension
    x0 = x0_traj.x if isinstance(x0_traj, Trajectory) else np.asarray(x0_traj, float)
    x0 = x0.reshape(t.size, d)
    x1 = np.asarray(x1_series, float).reshape(t.size, d)
    k0 = _burn_index(t, h, t_burn)
    src = 0.5 * np.einsum("nijk,nj,nk->ni", force.hessian(x0), x1, x1)
    out = np.zeros((t.size, d))
    if not np.any(src[k0:]):
        return out
    if kernel is None:
        kernel = build_green_kernel(scale, force, max_lag=h * (t.size - k0) + h)
    G, _ = kernel.lag_values(h * np.arange(t.size - k0))
    out[k0:] = _convolve_matrix(G, src[k0:], h)
    return out


def fit_decay_time(times, energy):
    """Least-squares fit of ``energy ~ exp(-t / T)``; returns ``T``."""
    times = np.asarray(times, float)
    energy = np.asarray(energy, float)
    ok = energy > 0
    slope = np.polyfit(times[ok], np.log(energy[ok]), 1)[0]
    return math.inf if slope >= 0 else -1.0 / slope


def solve_zeroth(scale, force, x0, p0, t_end, dt, *, t_start=0.0, radiation_reaction=True) -> Trajectory:
    """Undriven, order-reduced motion; ``metadata["decay_time"]`` holds the fitted
    energy decay time (conservative forces only)."""
    traj = integrate_bm(scale, force, None, x0, p0, t_end, dt, t_start=t_start,
                        radiation_reaction=radiation_reaction)
    if force.conservative:
        H = energy_series(traj, force)
        traj.metadata["decay_time"] = fit_decay_time(traj.times, H)
    else:
        traj.metadata["decay_time"] = None
    return traj


@dataclass(eq=False)
class HierarchySolution:
    times: np.ndarray
    x0_series: np.ndarray
    x1_series: np.ndarray
    p1_series: np.ndarray
    x2_series: np.ndarray
    order_included: int
    kernel: GreenKernel

    @property
    def x_total(self):
        return self.x0_series + self.x1_series + self.x2_series


def solve_hierarchy(scale, force, modes, x0, p0, t_end, dt, *, t_start=0.0, kernel=None, order=2):
    """Zeroth, first and (optionally) second orders on ``t_start + k dt``."""
    zeroth = solve_zeroth(scale, force, x0, p0, t_end, dt, t_start=t_start)
    t = zeroth.times
    if kernel is None:
        kernel = build_green_kernel(scale, force, max_lag=(t[-1] - t[0]) + dt)
    x1, p1 = first_order_response(kernel, modes, t)
    if order >= 2 and force.has_hessian:
        x2 = second_order_response(scale, force, zeroth.x, x1, t, kernel=kernel)
    else:
        x2 = np.zeros_like(x1)
    return HierarchySolution(t, zeroth.x, x1, p1, x2, min(int(order), 2), kernel)


@dataclass
class ConsistencyReport:
    t_burn: float
    window: float
    rms_full: float
    rms_residual: float
    relative_residual: float
    solution: HierarchySolution = field(repr=False)
    full: np.ndarray = field(repr=False)


def hierarchy_consistency(scale, force, modes, x0, p0, t_burn, window, dt) -> ConsistencyReport:
    """Compare the full integration with ``x0 + x1`` over ``[t_burn, t_burn + window]``.

    The full trajectory runs from ``t = 0``.  The expansion is anchored at
    ``t_burn``: ``x0`` is the damped free motion from the full state at
    ``t_burn`` and ``x1`` is driven by the field from ``t_burn`` on through
    the bare kernel, so the residual is the radiative damping the bare kernel
    leaves out.
    """
    n_burn = int(round(t_burn / dt))
    n_win = int(round(window / dt))
    full = integrate_bm(scale, force, modes, x0, p0, (n_burn + n_win) * dt, dt)
    xb, pb = full.x[n_burn], full.p[n_burn]
    sol = solve_hierarchy(scale, force, modes, xb, pb, n_win * dt, dt, t_start=n_burn * dt, order=1)
    xf = full.x[n_burn:]
    resid = xf - (sol.x0_series + sol.x1_series)
    rms_full = float(np.sqrt(np.mean(xf**2)))
    rms_res = float(np.sqrt(np.mean(resid**2)))
    return ConsistencyReport(n_burn * dt, n_win * dt, rms_full, rms_res, rms_res / rms_full, sol, xf)
