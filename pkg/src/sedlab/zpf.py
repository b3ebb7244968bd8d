"""Discrete-mode synthesis of the zero-point field in the dipole approximation.

Each spatial component of the field is a cosine sum

    E_k(t) = sum_a A_a cos(omega_a t + phi_ka)

with independent uniform phases and amplitudes
``A_a = sqrt(4 hbar omega_a^3 dw_a / (3 pi c^3))``, so that the phase-averaged
autocovariance ``sum_a (A_a^2 / 2) cos(omega_a u)`` is the Riemann sum of the
``hbar omega^3`` correlation spectrum over the band.

Random streams
--------------
Phases come from ``numpy.random.PCG64`` seeded with
``SeedSequence(seed, spawn_key=(realization, component))``; draw ``a`` of that
stream is the phase of mode ``a``.  Frequency jitter uses the separate stream
``SeedSequence(seed, spawn_key=(JITTER_KEY,))`` and is shared by all
realizations of a spec.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.signal import czt

from .errors import EmptyBandwidth, NonPositiveCutoff, TooFewModes
from .units import PhysicalScale

GENERATOR = "PCG64"
JITTER_KEY = 0x5EED
_CZT_BLOCK = 2048
_DIRECT_CHUNK = 1 << 20


def _stream(seed, *key):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=key)))


def resonant_bandwidth(scale: PhysicalScale, delta=0.25):
    """Band ``[omega0 (1 - delta), omega0 (1 + delta)]`` around the resonance."""
    if not 0 < delta < 1:
        raise EmptyBandwidth(f"delta must lie in (0, 1), got {delta!r}")
    return (scale.omega0 * (1 - delta), scale.omega0 * (1 + delta))


@dataclass(frozen=True)
class FieldSpec:
    """Everything needed to regenerate a family of field realizations.

    Per-mode frequencies are implied by these fields and never stored, which keeps
    the JSON form small.
    """

    bandwidth: tuple
    n_modes: int
    spacing: str = "uniform"
    components: int = 1
    seed: int = 0
    jitter: bool = True

    def __post_init__(self):
        object.__setattr__(self, "bandwidth", (float(self.bandwidth[0]), float(self.bandwidth[1])))

    def build(self, scale: PhysicalScale, realization=0) -> "FieldModeSet":
        return build_mode_set(
            scale,
            self.bandwidth,
            self.n_modes,
            spacing=self.spacing,
            seed=self.seed,
            components=self.components,
            jitter=self.jitter,
            realization=realization,
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["bandwidth"] = list(self.bandwidth)
        d["generator"] = GENERATOR
        return d

    @classmethod
    def from_dict(cls, d) -> "FieldSpec":
        return cls(
            bandwidth=tuple(d["bandwidth"]),
            n_modes=int(d["n_modes"]),
            spacing=d.get("spacing", "uniform"),
            components=int(d.get("components", 1)),
            seed=int(d.get("seed", 0)),
            jitter=bool(d.get("jitter", True)),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text) -> "FieldSpec":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class FieldModeSet:
    omegas: np.ndarray
    widths: np.ndarray
    amplitudes: np.ndarray
    phases: np.ndarray  # (components, n_modes)
    seed: int
    realization: int
    bandwidth: tuple
    spacing: str
    jitter: bool
    generator: str = GENERATOR
    _grid: tuple = field(default=None, repr=False)

    @property
    def n_modes(self) -> int:
        return self.omegas.size

    @property
    def components(self) -> int:
        return self.phases.shape[0]

    @property
    def omega_max(self) -> float:
        return float(self.omegas[-1])

    @property
    def variance(self) -> float:
        """Phase-averaged ``<E_k^2>`` of one component."""
        return float(np.sum(self.amplitudes**2) / 2)

    def autocovariance(self, lags):
        """Discrete target ``sum_a (A_a^2/2) cos(omega_a u)`` at each lag ``u``."""
        lags = np.asarray(lags, dtype=float)
        w = self.amplitudes**2 / 2
        return np.cos(np.multiply.outer(lags, self.omegas)) @ w

    @property
    def recurrence_time(self) -> float:
        """Period after which a uniform unjittered grid repeats itself (inf otherwise)."""
        if self._grid is None:
            return math.inf
        return 2 * math.pi / self._grid[1]


def build_mode_set(
    scale: PhysicalScale,
    bandwidth,
    n_modes,
    spacing="uniform",
    seed=0,
    components=1,
    jitter=True,
    realization=0,
) -> FieldModeSet:
    """Draw one realization of the field on ``n_modes`` modes spanning ``bandwidth``.

    Parameters
    ----------
    scale : PhysicalScale
    bandwidth : (float, float)
        ``(omega_min, omega_max)`` with ``0 < omega_min < omega_max``.
    n_modes : int
        At least 2.
    spacing : {"uniform", "log"}
        Cell layout; mode frequencies sit at cell centres (geometric centres
        for ``"log"``).
    seed, realization : int
        Select the phase stream (see module docstring).
    components : {1, 3}
    jitter : bool
        Move each frequency by up to half a cell width, to break exact
        recurrences of the cosine sum.

    Raises
    ------
    EmptyBandwidth, TooFewModes
    """
    lo, hi = float(bandwidth[0]), float(bandwidth[1])
    if not (lo > 0 and hi > lo and math.isfinite(hi)):
        raise EmptyBandwidth(f"need 0 < omega_min < omega_max, got ({lo!r}, {hi!r})")
    if n_modes is None or int(n_modes) < 2:
        raise TooFewModes(f"need at least 2 modes, got {n_modes!r}")
    if components not in (1, 3):
        raise ValueError(f"components must be 1 or 3, got {components!r}")
    n = int(n_modes)

    grid = None
    if spacing == "uniform":
        dw = (hi - lo) / n
        widths = np.full(n, dw)
        omegas = lo + (np.arange(n) + 0.5) * dw
        if not jitter:
            grid = (float(omegas[0]), dw)
    elif spacing in ("log", "logarithmic"):
        edges = np.geomspace(lo, hi, n + 1)
        widths = np.diff(edges)
        omegas = np.sqrt(edges[:-1] * edges[1:])
        spacing = "log"
    else:
        raise ValueError(f"unknown spacing {spacing!r}")

    if jitter:
        omegas = omegas + _stream(seed, JITTER_KEY).uniform(-0.5, 0.5, n) * widths

    amplitudes = np.sqrt(4 * scale.hbar * omegas**3 * widths / (3 * math.pi * scale.c**3))
    phases = np.empty((components, n))
    for k in range(components):
        # (-pi, pi]
        phases[k] = math.pi - _stream(seed, realization, k).uniform(0.0, 2 * math.pi, n)

    for arr in (omegas, widths, amplitudes, phases):
        arr.setflags(write=False)
    return FieldModeSet(
        omegas=omegas,
        widths=widths,
        amplitudes=amplitudes,
        phases=phases,
        seed=int(seed),
        realization=int(realization),
        bandwidth=(lo, hi),
        spacing=spacing,
        jitter=bool(jitter),
        _grid=grid,
    )


def eval_field(modes: FieldModeSet, t):
    """Exact cosine-sum field at time(s) ``t``.

    Returns shape ``(components,)`` for scalar ``t`` and ``(len(t), components)``
    otherwise.
    """
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty((t.size, modes.components))
    step = max(1, _DIRECT_CHUNK // modes.n_modes)
    for s in range(0, t.size, step):
        arg = np.multiply.outer(t[s : s + step], modes.omegas)
        for k in range(modes.components):
            out[s : s + step, k] = np.cos(arg + modes.phases[k]) @ modes.amplitudes
    return out[0] if scalar else out


def sample_field(modes: FieldModeSet, t0, h, n):
    """Field on the uniform grid ``t0 + j h``, ``j = 0..n-1``; shape ``(n, components)``.

    Uniform unjittered mode sets are evaluated with blocked chirp-z transforms
    (same sums, ``O(n log n)``); anything else falls back to direct summation.
    """
    n = int(n)
    if modes._grid is None:
        return eval_field(modes, t0 + h * np.arange(n))
    w_first, dw = modes._grid
    coeffs = modes.amplitudes * np.exp(1j * modes.phases)  # (components, n_modes)
    alpha = np.arange(modes.n_modes)
    block = min(_CZT_BLOCK, n)
    base = np.exp(1j * w_first * h * np.arange(block))
    rot = np.exp(1j * dw * h)
    out = np.empty((n, modes.components))
    for s in range(0, n, block):
        m = min(block, n - s)
        ts = t0 + s * h
        start = coeffs * np.exp(1j * (w_first + alpha * dw) * ts)
        z = czt(start, m=m, w=rot, a=1.0, axis=-1)
        out[s : s + m] = np.real(base[:m] * z).T
    return out


@dataclass(frozen=True)
class SpectralEstimate:
    lags: np.ndarray
    autocorr: np.ndarray
    stderr: np.ndarray
    target: np.ndarray
    n_realizations: int
    components: tuple = (0, 0)

    def within(self, k=3.0):
        """Boolean mask of lags whose estimate lies within ``k`` standard errors of target."""
        return np.abs(self.autocorr - self.target) <= k * self.stderr

    def fraction_within(self, k=3.0) -> float:
        return float(np.mean(self.within(k)))


def estimate_autocorrelation(
    scale: PhysicalScale,
    spec: FieldSpec,
    n_realizations,
    lags,
    t0=0.0,
    components=(0, 0),
) -> SpectralEstimate:
    """Monte Carlo estimate of ``<E_i(t0) E_j(t0 + u)>`` over independent realizations.

    For ``i != j`` the target is zero.
    """
    if n_realizations < 2:
        raise ValueError("need at least 2 realizations")
    i, j = components
    lags = np.asarray(lags, dtype=float)
    times = np.concatenate([[t0], t0 + lags])
    prods = np.empty((n_realizations, lags.size))
    first = None
    for r in range(n_realizations):
        modes = spec.build(scale, realization=r)
        if first is None:
            first = modes
        arg = np.multiply.outer(times, modes.omegas)
        ei0 = np.cos(arg[0] + modes.phases[i]) @ modes.amplitudes
        ej = np.cos(arg[1:] + modes.phases[j]) @ modes.amplitudes
        prods[r] = ei0 * ej
    mean = prods.mean(axis=0)
    stderr = prods.std(axis=0, ddof=1) / math.sqrt(n_realizations)
    target = first.autocovariance(lags) if i == j else np.zeros_like(lags)
    return SpectralEstimate(lags, mean, stderr, target, int(n_realizations), (i, j))


def vacuum_energy_density(scale: PhysicalScale, cutoff) -> float:
    """Energy density ``hbar cutoff^4 / (8 pi^2 c^3)`` of the field below ``cutoff``."""
    if not cutoff > 0:
        raise NonPositiveCutoff(f"cutoff must be positive, got {cutoff!r}")
    return scale.hbar * cutoff**4 / (8 * math.pi**2 * scale.c**3)
