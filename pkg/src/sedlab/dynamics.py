"""Single trajectories and phase ensembles of a charge driven by the zero-point field.

The equation of motion is the dipole-approximation Abraham-Lorentz equation
with the field force added, in order-reduced form::

    m x'' = f(x) + tau (df/dx) x' + e E(t)

integrated with classical fixed-step RK4.  ``E`` is an exactly evaluated
cosine sum (see :mod:`sedlab.zpf`), sampled on the half-step grid.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from . import _rk4
from .errors import (
    InconsistentInputs,
    MissingJacobian,
    MissingSecondDerivative,
    NonConservativeForce,
    NonFiniteState,
    StepTooLarge,
)
from .units import PhysicalScale, dissipation_time
from .zpf import FieldModeSet, FieldSpec, sample_field


@dataclass(frozen=True, eq=False)
class ForceModel:
    """External force acting on the particle.

    ``harmonic`` and ``polynomial`` forces act per axis with
    ``f_i(x) = sum_k c_k x_i**k``; they run on the compiled integrator.
    ``custom`` takes callables and runs on the Python loop.
    """

    kind: str
    dimension: int = 1
    coefficients: tuple = ()
    omega0: Optional[float] = None
    mass: Optional[float] = None
    force_fn: Optional[Callable] = None
    jacobian_fn: Optional[Callable] = None
    hessian_fn: Optional[Callable] = None
    potential_fn: Optional[Callable] = None

    @classmethod
    def harmonic(cls, omega0=1.0, mass=1.0, dimension=1) -> "ForceModel":
        return cls("harmonic", dimension, (0.0, -mass * omega0**2), float(omega0), float(mass))

    @classmethod
    def polynomial(cls, coefficients, dimension=1) -> "ForceModel":
        """``f(x) = sum_k coefficients[k] * x**k`` on each axis."""
        return cls("polynomial", dimension, tuple(float(c) for c in coefficients))

    @classmethod
    def custom(cls, force, jacobian=None, dimension=1, hessian=None, potential=None, check=True):
        model = cls("custom", dimension, (), None, None, force, jacobian, hessian, potential)
        if check and jacobian is not None:
            err = model.jacobian_error()
            if err > 1e-6:
                raise InconsistentInputs(f"jacobian disagrees with finite differences (rel err {err:.2e})")
        return model

    @property
    def compiled(self) -> bool:
        return self.kind in ("harmonic", "polynomial")

    @property
    def conservative(self) -> bool:
        return self.compiled or self.potential_fn is not None

    @property
    def has_jacobian(self) -> bool:
        return self.compiled or self.jacobian_fn is not None

    @property
    def has_hessian(self) -> bool:
        return self.compiled or self.hessian_fn is not None

    def _coeffs(self, order=0):
        c = np.asarray(self.coefficients, dtype=float)
        for _ in range(order):
            c = c[1:] * np.arange(1, c.size) if c.size > 1 else np.zeros(1)
        return c

    def force(self, x):
        x = np.asarray(x, dtype=float)
        if self.compiled:
            return np.polynomial.polynomial.polyval(x, self._coeffs())
        return np.asarray(self.force_fn(x), dtype=float)

    def jacobian(self, x):
        """``df_i/dx_j``, shape ``(..., d, d)``."""
        x = np.asarray(x, dtype=float)
        if self.compiled:
            diag = np.polynomial.polynomial.polyval(x, self._coeffs(1))
            return diag[..., :, None] * np.eye(self.dimension)
        if self.jacobian_fn is None:
            raise MissingJacobian("custom force has no jacobian")
        return np.asarray(self.jacobian_fn(x), dtype=float)

    def hessian(self, x):
        """``d2 f_i / dx_j dx_k``, shape ``(..., d, d, d)``."""
        x = np.asarray(x, dtype=float)
        if self.compiled:
            diag = np.polynomial.polynomial.polyval(x, self._coeffs(2))
            d = self.dimension
            out = np.zeros(x.shape[:-1] + (d, d, d))
            idx = np.arange(d)
            out[..., idx, idx, idx] = diag
            return out
        if self.hessian_fn is None:
            raise MissingSecondDerivative("custom force has no second derivatives")
        return np.asarray(self.hessian_fn(x), dtype=float)

    def potential(self, x):
        x = np.asarray(x, dtype=float)
        if self.compiled:
            c = self._coeffs()
            integ = np.concatenate([[0.0], -c / np.arange(1, c.size + 1)])
            return np.polynomial.polynomial.polyval(x, integ).sum(axis=-1)
        if self.potential_fn is None:
            raise NonConservativeForce("force has no potential")
        return np.asarray(self.potential_fn(x), dtype=float)

    def jacobian_error(self, n_points=8, seed=12345, h=1e-6) -> float:
        """Worst relative mismatch between the jacobian and central differences."""
        rng = np.random.default_rng(seed)
        worst = 0.0
        d = self.dimension
        for x in rng.uniform(-1, 1, (n_points, d)):
            fd = np.empty((d, d))
            for j in range(d):
                e = np.zeros(d)
                e[j] = h
                fd[:, j] = (self.force(x + e) - self.force(x - e)) / (2 * h)
            J = self.jacobian(x)
            worst = max(worst, float(np.max(np.abs(fd - J)) / max(1.0, np.max(np.abs(J)))))
        return worst

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "dimension": self.dimension,
            "coefficients": list(self.coefficients),
            "omega0": self.omega0,
        }


@dataclass(eq=False)
class Trajectory:
    times: np.ndarray
    x: np.ndarray  # (n, d)
    p: np.ndarray  # (n, d)
    seed: Optional[int]
    realization: Optional[int]
    scale: PhysicalScale
    metadata: dict = field(default_factory=dict)
    window: dict = field(default_factory=dict)


def _check_step(scale, modes, dt, t_end):
    if not t_end > 0:
        raise ValueError(f"t_end must be positive, got {t_end!r}")
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    w_max = modes.omega_max if modes is not None else scale.omega0
    limit = 2 * math.pi / (20 * w_max)
    if dt > limit * (1 + 1e-12):
        raise StepTooLarge(f"dt={dt:g} exceeds 2*pi/(20*omega_max)={limit:g}")


def _as_state(v, d):
    v = np.array(v, dtype=float).reshape(-1)
    if v.size == 1 and d > 1:
        v = np.full(d, v[0])
    if v.size != d:
        raise ValueError(f"state has {v.size} components, force has dimension {d}")
    return v


def _integrate(scale, force, modes, x0, p0, t_start, n_steps, dt, stride, w_start, radiation_reaction, field_on):
    d = force.dimension
    if field_on and modes is not None:
        if modes.components != d:
            raise ValueError(f"field has {modes.components} components, force has dimension {d}")
        E = sample_field(modes, t_start, 0.5 * dt, 2 * n_steps + 1)
    else:
        E = np.zeros((2 * n_steps + 1, d))
    tau = scale.tau if radiation_reaction else 0.0
    charge = scale.charge if field_on else 0.0
    n_rec = n_steps // stride + 1
    xs = np.empty((n_rec, d))
    ps = np.empty((n_rec, d))
    acc = np.zeros(len(_rk4.ACC_FIELDS) + 1)
    x0 = _as_state(x0, d)
    p0 = _as_state(p0, d)
    if force.compiled:
        bad = _rk4.rk4_poly(
            x0, p0, np.asarray(force.coefficients, float), scale.mass, tau, charge,
            E, dt, n_steps, stride, w_start, xs, ps, acc,
        )
    else:
        if force.jacobian_fn is None:
            raise MissingJacobian("order-reduced radiation reaction needs the force jacobian")
        bad = _rk4.rk4_callable(
            x0, p0, force.force, force.jacobian, scale.mass, tau, charge,
            E, dt, n_steps, stride, w_start, xs, ps, acc, force.potential_fn,
        )
    if bad >= 0:
        raise NonFiniteState(bad)
    count = acc[-1]
    window = {}
    if count > 0:
        window = {name: acc[i] / count for i, name in enumerate(_rk4.ACC_FIELDS)}
    return xs, ps, window


def integrate_bm(
    scale: PhysicalScale,
    force: ForceModel,
    modes: Optional[FieldModeSet],
    x0,
    p0,
    t_end,
    dt,
    *,
    t_start=0.0,
    record_every=1,
    window_start=None,
    radiation_reaction=True,
) -> Trajectory:
    """Integrate one trajectory from ``t_start`` to ``t_start + t_end``.

    ``modes=None`` switches the field off; ``radiation_reaction=False`` sets
    ``tau`` to zero in the damping term.  Window averages of energy, moments
    and the two power terms over ``t >= window_start`` are left in
    ``Trajectory.window``.

    Raises
    ------
    StepTooLarge
        If ``dt > 2 pi / (20 omega_max)``.
    NonFiniteState
        With the index of the first step that produced NaN/inf.
    """
    _check_step(scale, modes, dt, t_end)
    n_steps = int(round(t_end / dt))
    stride = max(1, int(record_every))
    w_start = n_steps + 1 if window_start is None else max(0, int(math.ceil((window_start - t_start) / dt - 1e-9)))
    xs, ps, window = _integrate(
        scale, force, modes, x0, p0, t_start, n_steps, dt, stride, w_start,
        radiation_reaction, modes is not None,
    )
    times = t_start + dt * stride * np.arange(xs.shape[0])
    meta = {
        "scale": scale.as_dict(),
        "force": force.describe(),
        "integrator": {"method": "rk4", "dt": dt, "n_steps": n_steps, "record_every": stride,
                       "radiation_reaction": radiation_reaction, "t_start": t_start},
    }
    if modes is not None:
        meta["field"] = {"seed": modes.seed, "realization": modes.realization, "n_modes": modes.n_modes,
                         "bandwidth": list(modes.bandwidth), "generator": modes.generator}
    return Trajectory(
        times=times,
        x=xs,
        p=ps,
        seed=None if modes is None else modes.seed,
        realization=None if modes is None else modes.realization,
        scale=scale,
        metadata=meta,
        window=window,
    )


def energy_series(traj: Trajectory, force: ForceModel):
    """``H = p^2/2m + V(x)`` on the trajectory grid."""
    if not force.conservative:
        raise NonConservativeForce("energy needs a potential; custom force has none")
    kinetic = 0.5 * np.sum(traj.p**2, axis=-1) / traj.scale.mass
    return kinetic + force.potential(traj.x)


@dataclass(eq=False)
class EnsembleStats:
    """Ensemble moments on the recorded grid plus per-trajectory window averages.

    Every ``se_*`` array is the standard error of the matching estimate.
    ``window`` maps a quantity name to an ``(n_traj,)`` array of time averages
    over ``stationary_window``; :meth:`window_mean` turns one into a mean and
    standard error across trajectories.
    """

    n_traj: int
    times: np.ndarray
    mean_x: np.ndarray
    mean_p: np.ndarray
    var_x: np.ndarray
    var_p: np.ndarray
    mean_H: np.ndarray
    se_mean_x: np.ndarray
    se_mean_p: np.ndarray
    se_var_x: np.ndarray
    se_var_p: np.ndarray
    se_mean_H: np.ndarray
    stationary_window: tuple
    window: dict
    seeds: dict
    metadata: dict = field(default_factory=dict)

    def window_mean(self, name):
        v = self.window[name]
        return float(np.mean(v)), float(np.std(v, ddof=1) / math.sqrt(v.size))


def _se_var(a):
    """Standard error of the sample variance along axis 0."""
    n = a.shape[0]
    dev2 = (a - a.mean(axis=0)) ** 2
    return dev2.std(axis=0, ddof=1) / math.sqrt(n)


def run_ensemble(
    scale: PhysicalScale,
    force: ForceModel,
    field_spec: Optional[FieldSpec],
    x0,
    p0,
    t_end,
    dt,
    n_traj,
    base_seed=0,
    *,
    window=None,
    n_records=2000,
    threads=1,
    radiation_reaction=True,
) -> EnsembleStats:
    """Run ``n_traj`` trajectories, trajectory ``i`` driven by realization ``i`` of
    ``field_spec`` with its seed replaced by ``base_seed``.

    The stationary window defaults to ``[max(5 tau_d, t_end/2), t_end]``.
    Results do not depend on ``threads``: each trajectory is computed
    independently and aggregated in index order.
    """
    if n_traj < 2:
        raise ValueError("need at least 2 trajectories")
    spec = None if field_spec is None else replace(field_spec, seed=int(base_seed))
    probe = None if spec is None else spec.build(scale, 0)
    _check_step(scale, probe, dt, t_end)
    n_steps = int(round(t_end / dt))
    if window is None:
        window = (max(5 * dissipation_time(scale), t_end / 2), t_end)
    if not window[0] < t_end:
        raise ValueError(f"stationary window starts at {window[0]:g}, after t_end={t_end:g}; pass window=")
    w_start = int(math.ceil(window[0] / dt - 1e-9))
    stride = max(1, n_steps // max(1, int(n_records)))

    def one(i):
        modes = None if spec is None else spec.build(scale, i)
        try:
            return _integrate(scale, force, modes, x0, p0, 0.0, n_steps, dt, stride, w_start,
                              radiation_reaction, modes is not None)
        except NonFiniteState as exc:
            raise NonFiniteState(exc.step, trajectory=i) from exc

    if threads > 1:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            results = list(pool.map(one, range(n_traj)))
    else:
        results = [one(i) for i in range(n_traj)]

    X = np.stack([r[0] for r in results])  # (n_traj, n_rec, d)
    P = np.stack([r[1] for r in results])
    H = 0.5 * np.sum(P**2, axis=-1) / scale.mass
    if force.conservative:
        H = H + force.potential(X)
    else:
        H = np.full(H.shape, np.nan)
    sq = math.sqrt(n_traj)
    win = {name: np.array([r[2][name] for r in results]) for name in _rk4.ACC_FIELDS}
    return EnsembleStats(
        n_traj=int(n_traj),
        times=dt * stride * np.arange(X.shape[1]),
        mean_x=X.mean(axis=0),
        mean_p=P.mean(axis=0),
        var_x=X.var(axis=0, ddof=1),
        var_p=P.var(axis=0, ddof=1),
        mean_H=H.mean(axis=0),
        se_mean_x=X.std(axis=0, ddof=1) / sq,
        se_mean_p=P.std(axis=0, ddof=1) / sq,
        se_var_x=_se_var(X),
        se_var_p=_se_var(P),
        se_mean_H=H.std(axis=0, ddof=1) / sq,
        stationary_window=(float(window[0]), float(window[1])),
        window=win,
        seeds={"base_seed": int(base_seed), "realizations": [0, int(n_traj) - 1],
               "generator": "PCG64"},
        metadata={
            "scale": scale.as_dict(),
            "force": force.describe(),
            "field": None if spec is None else spec.to_dict(),
            "integrator": {"method": "rk4", "dt": dt, "n_steps": n_steps, "record_every": stride,
                           "radiation_reaction": radiation_reaction},
        },
    )
