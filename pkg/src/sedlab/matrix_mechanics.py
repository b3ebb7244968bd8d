"""Response coefficients organized as matrices, and the commutator they obey.

Convention: ``omega_grid[n, k]`` holds ``omega_kn = (E_k - E_n) / hbar`` and
momentum elements follow ``p[n, k] = -i m omega_kn x[n, k]``.  Matrices are
the top-left ``N x N`` block of an infinite ladder, so the last row/column is
missing its upper neighbour; results on index ``N - 1`` are flagged as edge.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DimensionTooSmall, IndexOutOfRange, InconsistentInputs, MismatchedModeSets
from .units import PhysicalScale


def _cjson(a):
    a = np.asarray(a)
    return [[[float(v.real), float(v.imag)] for v in row] for row in a]


def _from_cjson(rows):
    arr = np.asarray(rows, dtype=float)
    return arr[..., 0] + 1j * arr[..., 1]


@dataclass(frozen=True, eq=False)
class ResponseMatrices:
    x_mat: np.ndarray
    p_mat: np.ndarray
    omega_grid: np.ndarray
    scale: PhysicalScale

    @property
    def dim(self) -> int:
        return self.x_mat.shape[0]

    @classmethod
    def from_x(cls, x_mat, omega_grid, scale, check=True) -> "ResponseMatrices":
        """Build from user-supplied dipole elements; ``p`` follows from ``x``."""
        x = np.asarray(x_mat, dtype=complex)
        w = np.asarray(omega_grid, dtype=float)
        mats = cls(x, -1j * scale.mass * w * x, w, scale)
        if check:
            mats.validate()
        return mats

    def validate(self, atol=1e-12):
        x, p, w = self.x_mat, self.p_mat, self.omega_grid
        if x.ndim != 2 or x.shape[0] != x.shape[1] or x.shape != w.shape or x.shape != p.shape:
            raise InconsistentInputs("x, p and omega must be square and of equal shape")
        scale = max(1.0, float(np.max(np.abs(x))))
        if np.max(np.abs(x - x.conj().T)) > atol * scale:
            raise InconsistentInputs("x is not Hermitian")
        if np.max(np.abs(w + w.T)) > atol * max(1.0, float(np.max(np.abs(w)))):
            raise InconsistentInputs("omega grid is not antisymmetric")
        pscale = max(1.0, float(np.max(np.abs(p))))
        if np.max(np.abs(p - p.conj().T)) > atol * pscale:
            raise InconsistentInputs("p is not Hermitian")
        if np.max(np.abs(p + 1j * self.scale.mass * w * x)) > atol * pscale:
            raise InconsistentInputs("p != -i m omega x")
        return self

    def is_edge(self, n) -> bool:
        return n == self.dim - 1

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "x": _cjson(self.x_mat),
            "p": _cjson(self.p_mat),
            "omega": self.omega_grid.tolist(),
            "scale": self.scale.as_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d) -> "ResponseMatrices":
        scale = PhysicalScale.from_dict(d["scale"])
        x = _from_cjson(d["x"])
        w = np.asarray(d["omega"], dtype=float)
        if "p" in d:
            mats = cls(x, _from_cjson(d["p"]), w, scale)
            mats.validate()
            return mats
        return cls.from_x(x, w, scale)

    @classmethod
    def from_json(cls, text) -> "ResponseMatrices":
        return cls.from_dict(json.loads(text))


def sho_response_matrices(scale: PhysicalScale, omega0, N) -> ResponseMatrices:
    """Oscillator response matrices truncated to ``N`` states.

    ``x[n, n+1] = x[n+1, n] = sqrt((n+1) hbar / (2 m omega0))`` and
    ``omega_kn = (k - n) omega0``.
    """
    if N < 2:
        raise DimensionTooSmall(f"need N >= 2, got {N!r}")
    n = np.arange(N - 1)
    elems = np.sqrt((n + 1) * scale.hbar / (2 * scale.mass * omega0))
    x = np.zeros((N, N), dtype=complex)
    x[n, n + 1] = elems
    x[n + 1, n] = elems
    idx = np.arange(N)
    w = omega0 * (idx[None, :] - idx[:, None]).astype(float)
    return ResponseMatrices(x, -1j * scale.mass * w * x, w, scale)


class TRKResult(NamedTuple):
    value: float
    edge: bool


def trk_sum(mats: ResponseMatrices, n) -> TRKResult:
    """``sum_k omega_kn |x_nk|^2``; equals ``hbar / 2m`` away from the edge."""
    if not 0 <= n < mats.dim:
        raise IndexOutOfRange(f"state {n} outside 0..{mats.dim - 1}")
    value = float(np.sum(mats.omega_grid[n] * np.abs(mats.x_mat[n]) ** 2))
    return TRKResult(value, mats.is_edge(n))


@dataclass(frozen=True, eq=False)
class CommutatorReport:
    matrix: np.ndarray
    diagonal_errors: np.ndarray
    edge_flag: bool
    hbar: float

    @property
    def max_offdiagonal(self) -> float:
        off = self.matrix - np.diag(np.diag(self.matrix))
        return float(np.max(np.abs(off)))

    @property
    def max_interior_error(self) -> float:
        """Largest ``|[x,p]_nn - i hbar|`` over non-edge rows."""
        return float(np.max(self.diagonal_errors[:-1])) if self.edge_flag else float(np.max(self.diagonal_errors))

    def to_dict(self) -> dict:
        return {
            "dim": int(self.matrix.shape[0]),
            "matrix": _cjson(self.matrix),
            "diagonal_errors": self.diagonal_errors.tolist(),
            "edge_flag": self.edge_flag,
            "hbar": self.hbar,
        }


def commutator(mats: ResponseMatrices) -> CommutatorReport:
    """``[x, p] = x p - p x`` with per-diagonal errors against ``i hbar``."""
    c = mats.x_mat @ mats.p_mat - mats.p_mat @ mats.x_mat
    errs = np.abs(np.diag(c) - 1j * mats.scale.hbar)
    return CommutatorReport(c, errs, True, mats.scale.hbar)


@dataclass(frozen=True)
class LinearForm:
    """``f = sum_a (coef[a] a_a + conj_coef[a] a*_a)`` over labelled normal variables."""

    coef: dict
    conj_coef: dict

    @property
    def labels(self):
        return set(self.coef) | set(self.conj_coef)


def bilinear_form(f: LinearForm, g: LinearForm, strict=True) -> complex:
    """``sum_a (df/da_a dg/da*_a - dg/da_a df/da*_a)`` for linear forms.

    With ``strict`` both forms must be written over the same set of modes.
    """
    if strict and f.labels != g.labels:
        raise MismatchedModeSets(f"mode sets differ: {sorted(map(str, f.labels ^ g.labels))}")
    total = 0j
    for a in f.labels | g.labels:
        total += f.coef.get(a, 0) * g.conj_coef.get(a, 0) - g.coef.get(a, 0) * f.conj_coef.get(a, 0)
    return complex(total)


def state_forms(mats: ResponseMatrices, n, t=0.0):
    """``x_n(t)`` and ``p_n(t)`` as linear forms over the modes ``a_nk`` linking ``n`` to ``k``."""
    xc, xs, pc, ps = {}, {}, {}, {}
    for k in range(mats.dim):
        if mats.x_mat[n, k] == 0:
            continue
        ph = np.exp(-1j * mats.omega_grid[n, k] * t)
        xc[(n, k)] = mats.x_mat[n, k] * ph
        xs[(n, k)] = np.conj(mats.x_mat[n, k] * ph)
        pc[(n, k)] = mats.p_mat[n, k] * ph
        ps[(n, k)] = np.conj(mats.p_mat[n, k] * ph)
    return LinearForm(xc, xs), LinearForm(pc, ps)
