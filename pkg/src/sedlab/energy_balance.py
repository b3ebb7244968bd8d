"""Absorbed and radiated power in a stationary state, and spontaneous emission rates.

For state ``n`` with response coefficients ``x_nk`` (one axis):

    absorbed  =  (2 e^2 / 3 c^3) sum_k |x_nk|^2 omega_kn^4 sign(omega_kn)
    radiated  = -(2 e^2 / 3 c^3) sum_k |x_nk|^2 omega_kn^4
    net       = -(4 e^2 / 3 c^3) sum_{k below n} |x_nk|^2 omega_kn^4
    A_nk      =  (4 e^2 / 3 hbar c^3) |x_nk|^2 |omega_kn|^3

The frequency integral over the field spectrum collapses onto the discrete
transition frequencies, so no delta function is ever approximated.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .dynamics import ForceModel, run_ensemble
from .errors import EdgeState, UpwardTransition
from .matrix_mechanics import ResponseMatrices, sho_response_matrices
from .units import PhysicalScale, dissipation_time
from .zpf import FieldSpec, resonant_bandwidth


def _prefactor(scale):
    return 2 * scale.charge**2 / (3 * scale.c**3)


def _check_state(mats, n):
    if not 0 <= n < mats.dim - 1:
        raise EdgeState(f"state {n} is outside the non-edge range 0..{mats.dim - 2}")


def _weights(mats, n):
    return np.abs(mats.x_mat[n]) ** 2 * mats.omega_grid[n] ** 4


def absorbed_power(mats: ResponseMatrices, n) -> float:
    """Mean power drawn from the field in state ``n``."""
    _check_state(mats, n)
    w = _weights(mats, n) * np.sign(mats.omega_grid[n])
    return float(_prefactor(mats.scale) * np.sum(w))


def radiated_power(mats: ResponseMatrices, n) -> float:
    """Mean radiation-reaction power in state ``n`` (never positive)."""
    _check_state(mats, n)
    return float(-_prefactor(mats.scale) * np.sum(_weights(mats, n)))


def einstein_A(mats: ResponseMatrices, n, k) -> float:
    """Spontaneous emission rate for the downward transition ``n -> k``.

    Raises
    ------
    UpwardTransition
        If state ``k`` does not lie below ``n``.
    """
    w_kn = mats.omega_grid[n, k]
    if not w_kn < 0:
        raise UpwardTransition(f"transition {n}->{k} is not downward (omega_kn={w_kn:g})")
    sc = mats.scale
    return float(4 * sc.charge**2 / (3 * sc.hbar * sc.c**3) * abs(mats.x_mat[n, k]) ** 2 * abs(w_kn) ** 3)


@dataclass
class Transition:
    k: int
    omega_nk: float
    A_nk: float
    power: float  # hbar omega_nk A_nk


@dataclass
class BalanceReport:
    state_n: int
    absorbed_power: float
    radiated_power: float
    net_rate: float
    per_transition: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def table(self) -> str:
        lines = [
            f"state n = {self.state_n}",
            f"  absorbed  {self.absorbed_power: .6e}",
            f"  radiated  {self.radiated_power: .6e}",
            f"  net       {self.net_rate: .6e}",
        ]
        if self.per_transition:
            lines.append(f"  {'k':>4} {'omega_nk':>14} {'A_nk':>14} {'hbar w A':>14}")
            for tr in self.per_transition:
                lines.append(f"  {tr.k:>4} {tr.omega_nk:>14.6e} {tr.A_nk:>14.6e} {tr.power:>14.6e}")
        return "\n".join(lines)


def net_rate(mats: ResponseMatrices, n):
    """``d<H>/dt`` in state ``n`` and the full :class:`BalanceReport`."""
    _check_state(mats, n)
    w_nk = -mats.omega_grid[n]
    below = np.nonzero((w_nk > 0) & (mats.x_mat[n] != 0))[0]
    rate = float(-2 * _prefactor(mats.scale) * np.sum(_weights(mats, n)[below]))
    transitions = []
    for k in below:
        A = einstein_A(mats, n, int(k))
        transitions.append(Transition(int(k), float(w_nk[k]), A, mats.scale.hbar * float(w_nk[k]) * A))
    report = BalanceReport(n, absorbed_power(mats, n), radiated_power(mats, n), rate, transitions)
    return rate, report


@dataclass(frozen=True)
class EnsembleSpec:
    """Ensemble settings for the simulated balance check."""

    n_traj: int = 200
    t_end: Optional[float] = None  # default 20 tau_d
    dt: float = 0.2
    n_modes: int = 2000
    delta: float = 0.25
    base_seed: int = 0
    field_on: bool = True
    radiation_reaction: bool = True
    threads: int = 1


@dataclass
class BalanceComparison:
    closed_form: float  # tau omega0^2 hbar omega0 / 2
    absorbed: float
    absorbed_se: float
    radiated: float
    radiated_se: float
    net: float
    net_se: float
    mean_H: float
    mean_H_se: float
    n_traj: int
    window: tuple
    seeds: dict

    def to_dict(self) -> dict:
        return asdict(self)


def simulate_balance(scale: PhysicalScale, omega0=None, spec: EnsembleSpec = EnsembleSpec(), stats=None):
    """Measure absorbed and radiated power on a driven oscillator ensemble.

    The radiated power uses the order-reduced surrogate ``tau (p/m) J (p/m)``
    that the integrator itself applies.  Pass precomputed ``stats`` from
    :func:`~sedlab.dynamics.run_ensemble` to skip the simulation.
    """
    omega0 = scale.omega0 if omega0 is None else omega0
    force = ForceModel.harmonic(omega0, scale.mass)
    if stats is None:
        t_end = spec.t_end if spec.t_end is not None else 20 * dissipation_time(scale)
        fspec = FieldSpec(resonant_bandwidth(scale, spec.delta), spec.n_modes, jitter=False) if spec.field_on else None
        stats = run_ensemble(scale, force, fspec, 0.0, 0.0, t_end, spec.dt, spec.n_traj, spec.base_seed,
                             threads=spec.threads, radiation_reaction=spec.radiation_reaction)
    mats = sho_response_matrices(scale, omega0, 2)
    ab, ab_se = stats.window_mean("absorbed")
    rad, rad_se = stats.window_mean("radiated")
    net = stats.window["absorbed"] + stats.window["radiated"]
    H, H_se = stats.window_mean("H")
    return BalanceComparison(
        closed_form=absorbed_power(mats, 0),
        absorbed=ab,
        absorbed_se=ab_se,
        radiated=rad,
        radiated_se=rad_se,
        net=float(np.mean(net)),
        net_se=float(np.std(net, ddof=1) / math.sqrt(net.size)),
        mean_H=H,
        mean_H_se=H_se,
        n_traj=stats.n_traj,
        window=stats.stationary_window,
        seeds=stats.seeds,
    )
