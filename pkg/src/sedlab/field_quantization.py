"""Single-mode field quadratures, ladder matrices and mode Hamiltonians.

A mode of frequency ``omega`` only couples field state ``n`` to ``n +/- 1``.
Quadrature elements obey ``p[n, n'] = -i omega_{n'n} q[n, n']`` with
``omega_{n+1,n} = +omega``; the commutator fixes
``|q[n, n+1]|^2 = (n + 1) hbar / (2 omega)``.  Phases are a convention:
``q[n, n+1]`` is taken real and positive.

As with the particle matrices, the last index of a truncated matrix is edge
and is excluded from identity checks.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionTooSmall, DuplicateLabels, InconsistentInputs
from .units import PhysicalScale

_GEOM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ModeLabel:
    """Wave vector ``k`` (``|k| = omega / c``), polarization ``eps`` (unit, ``k . eps = 0``)."""

    k_vector: tuple
    polarization: tuple
    omega: float
    c: float = 1.0

    def __post_init__(self):
        k = np.asarray(self.k_vector, float)
        e = np.asarray(self.polarization, float)
        if k.shape != (3,) or e.shape != (3,):
            raise InconsistentInputs("k and polarization must be 3-vectors")
        if abs(np.linalg.norm(k) - self.omega / self.c) > _GEOM_TOL * (self.omega / self.c):
            raise InconsistentInputs("|k| != omega / c")
        if abs(np.linalg.norm(e) - 1) > _GEOM_TOL:
            raise InconsistentInputs("polarization is not a unit vector")
        if abs(k @ e) > _GEOM_TOL * max(1.0, np.linalg.norm(k)):
            raise InconsistentInputs("polarization not transverse to k")
        object.__setattr__(self, "k_vector", tuple(float(v) for v in k))
        object.__setattr__(self, "polarization", tuple(float(v) for v in e))

    @classmethod
    def along(cls, direction, polarization, omega, c=1.0) -> "ModeLabel":
        d = np.asarray(direction, float)
        return cls(tuple(d / np.linalg.norm(d) * omega / c), tuple(polarization), float(omega), float(c))

    def key(self):
        return (self.k_vector, self.polarization)

    def __eq__(self, other):
        return isinstance(other, ModeLabel) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def to_dict(self) -> dict:
        return {
            "k_vector": list(self.k_vector),
            "k_unit": "1/length",
            "polarization": list(self.polarization),
            "omega": self.omega,
            "omega_unit": "1/time",
            "c": self.c,
            "c_unit": "length/time",
        }

    @classmethod
    def from_dict(cls, d) -> "ModeLabel":
        return cls(tuple(d["k_vector"]), tuple(d["polarization"]), float(d["omega"]), float(d.get("c", 1.0)))


def build_quadrature_matrices(scale: PhysicalScale, omega, N):
    """Tridiagonal ``(q, p)`` for one mode, truncated to ``N`` field states."""
    if N < 2:
        raise DimensionTooSmall(f"need N >= 2, got {N!r}")
    n = np.arange(N - 1)
    qe = np.sqrt((n + 1) * scale.hbar / (2 * omega))
    q = np.zeros((N, N), dtype=complex)
    q[n, n + 1] = qe
    q[n + 1, n] = qe
    p = np.zeros((N, N), dtype=complex)
    p[n, n + 1] = -1j * omega * qe
    p[n + 1, n] = 1j * omega * qe
    return q, p


def f8_residuals(q, p, omega):
    """``omega q[n,n+1] - i p[n,n+1]`` and ``omega q[n,n-1] + i p[n,n-1]`` per row."""
    N = q.shape[0]
    n = np.arange(N - 1)
    up = omega * q[n, n + 1] - 1j * p[n, n + 1]
    down = omega * q[n + 1, n] + 1j * p[n + 1, n]
    return up, down


@dataclass(frozen=True, eq=False)
class LadderPair:
    a_mat: np.ndarray
    adag_mat: np.ndarray
    label: ModeLabel
    scale: PhysicalScale

    @property
    def dim(self) -> int:
        return self.a_mat.shape[0]

    def to_dict(self) -> dict:
        from .matrix_mechanics import _cjson

        return {"dim": self.dim, "a": _cjson(self.a_mat), "adag": _cjson(self.adag_mat),
                "label": self.label.to_dict(), "scale": self.scale.as_dict()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def ladder_from_quadratures(q, p, scale: PhysicalScale, omega, label=None) -> LadderPair:
    """``a = (omega q + i p) / sqrt(2 hbar omega)`` and ``a_dag = (omega q - i p) / sqrt(2 hbar omega)``.

    Raises
    ------
    InconsistentInputs
        If the quadratures violate the single-frequency constraints by more than 1e-10.
    """
    up, down = f8_residuals(q, p, omega)
    tol = 1e-10 * max(1.0, float(np.max(np.abs(omega * q))))
    if max(np.max(np.abs(up), initial=0), np.max(np.abs(down), initial=0)) > tol:
        raise InconsistentInputs("quadratures couple a mode to more than its two neighbours")
    norm = math.sqrt(2 * scale.hbar * omega)
    a = (omega * q + 1j * p) / norm
    adag = (omega * q - 1j * p) / norm
    if label is None:
        label = ModeLabel.along((0, 0, 1), (1, 0, 0), omega, scale.c)
    return LadderPair(a, adag, label, scale)


def number_state(N, n):
    e = np.zeros(N, dtype=complex)
    e[n] = 1.0
    return e


def _embed(mat, offset, total):
    out = np.zeros((total, total), dtype=complex)
    k = mat.shape[0]
    out[offset : offset + k, offset : offset + k] = mat
    return out


@dataclass(frozen=True, eq=False)
class MultimodeReport:
    labels: list
    diag_errors: np.ndarray  # max |[a_i, a_i^dag] - 1| on non-edge diagonal, per mode
    cross_adag: np.ndarray  # max |[a_i, a_j^dag]| for i != j (0 on the diagonal)
    cross_a: np.ndarray  # max |[a_i, a_j]|

    @property
    def passed(self) -> bool:
        return bool(
            np.all(self.diag_errors < 1e-12) and np.all(self.cross_adag == 0) and np.all(self.cross_a == 0)
        )


def multimode_commutators(pairs) -> MultimodeReport:
    """Place each mode on its own diagonal block and check all pairwise commutators."""
    labels = [pr.label for pr in pairs]
    if len(set(labels)) != len(labels):
        raise DuplicateLabels("two ladder pairs share a (k, polarization) label")
    dims = [pr.dim for pr in pairs]
    offsets = np.concatenate([[0], np.cumsum(dims)[:-1]]).astype(int)
    total = int(sum(dims))
    A = [_embed(pr.a_mat, o, total) for pr, o in zip(pairs, offsets)]
    Ad = [_embed(pr.adag_mat, o, total) for pr, o in zip(pairs, offsets)]
    m = len(pairs)
    diag = np.zeros(m)
    cross_adag = np.zeros((m, m))
    cross_a = np.zeros((m, m))
    for i in range(m):
        for j in range(m):
            c1 = A[i] @ Ad[j] - Ad[j] @ A[i]
            c2 = A[i] @ A[j] - A[j] @ A[i]
            cross_a[i, j] = np.max(np.abs(c2))
            if i == j:
                o, k = offsets[i], dims[i]
                block = c1[o : o + k, o : o + k]
                interior = np.diag(block)[:-1]
                off = block - np.diag(np.diag(block))
                diag[i] = max(np.max(np.abs(interior - 1)), np.max(np.abs(off)))
            else:
                cross_adag[i, j] = np.max(np.abs(c1))
    return MultimodeReport(labels, diag, cross_adag, cross_a)


def mode_hamiltonians(pair: LadderPair):
    """``(H_sym, H_absorb, H_emit)`` for one mode.

    ``H_sym = (hbar w / 2)(a a^dag + a^dag a)``, ``H_absorb = hbar w a^dag a``,
    ``H_emit = hbar w a a^dag``.
    """
    hw = pair.scale.hbar * pair.label.omega
    a, ad = pair.a_mat, pair.adag_mat
    h_abs = hw * (ad @ a)
    h_emit = hw * (a @ ad)
    h_sym = 0.5 * hw * (a @ ad + ad @ a)
    return h_sym, h_abs, h_emit


def expectation(op, n):
    """``<n| op |n>`` in the number basis."""
    return complex(op[n, n])
