"""Named experiments driven by a JSON config, with manifests and sweeps.

A config file holds exactly one experiment::

    {"experiment": "GroundState", "seed": 2,
     "field": {"n_modes": 2000}, "ensemble": {"n_traj": 200}}

Missing keys take the defaults in :data:`SCHEMA` and, per experiment, in
:data:`EXPERIMENT_DEFAULTS`.  The config hash is the SHA-256 of the resolved
config in canonical JSON, without the ``output`` section, so moving the
output directory does not change it.  Thread count is a run option, not part
of the config: results never depend on it.

Sweeps
------
Any scalar setting may be given as a list, e.g. ``"field": {"delta": [0.1,
0.25, 0.5]}``.  :func:`sweep` runs one experiment per value and writes a
combined CSV.  Exactly one axis may be swept.
"""

from __future__ import annotations

import copy
import json
import math
import os
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import io
from ._version import __version__
from .dynamics import ForceModel, integrate_bm, run_ensemble
from .energy_balance import absorbed_power, einstein_A, net_rate, radiated_power, simulate_balance
from .errors import ConfigParseError, EmptySweep, ExperimentError, MultipleSweptAxes, SedlabError
from .field_quantization import (
    ModeLabel,
    build_quadrature_matrices,
    ladder_from_quadratures,
    mode_hamiltonians,
    multimode_commutators,
    number_state,
)
from .hierarchy import build_green_kernel, hierarchy_consistency, second_order_response
from .matrix_mechanics import bilinear_form, commutator, sho_response_matrices, state_forms, trk_sum
from .units import (
    ELECTRON_CHARGE_G,
    ELECTRON_MASS,
    HBAR,
    SPEED_OF_LIGHT,
    UnitSystem,
    dissipation_time,
    make_scale,
)
from .zpf import FieldSpec, estimate_autocorrelation, resonant_bandwidth, vacuum_energy_density

ENV_OUT = "SEDLAB_OUT"
DEFAULT_OUT = "sedlab_out"

EXPERIMENTS = (
    "SpectrumCheck",
    "GroundState",
    "Hierarchy",
    "Commutator",
    "FieldOperators",
    "EnergyBalance",
    "CutoffSweep",
)

class _ANY:
    """Type marker: number, list or null."""


class _PATH:
    """Type marker: string or null."""

SCHEMA = {
    "experiment": (str, None),
    "seed": (int, 0),
    "scale": {
        "system": (str, "natural"),
        "epsilon": (float, 1e-3),
        "omega0": (float, 1.0),
        "mass": (float, 1.0),
        "hbar": (float, 1.0),
        "c": (float, 1.0),
        "charge": (_ANY, None),
    },
    "field": {
        "enabled": (bool, True),
        "delta": (float, 0.25),
        "bandwidth": (_ANY, None),
        "n_modes": (int, 2000),
        "spacing": (str, "uniform"),
        "components": (int, 1),
        "jitter": (bool, False),
    },
    "integrator": {
        "dt": (float, 0.2),
        "t_end": (_ANY, None),
        "n_records": (int, 2000),
        "window_start": (_ANY, None),
        "radiation_reaction": (bool, True),
    },
    "ensemble": {
        "n_traj": (int, 200),
        "x0": (float, 0.0),
        "p0": (float, 0.0),
    },
    "output": {
        "dir": (_PATH, None),
        "formats": (list, ["csv", "json"]),
    },
}

# Per-experiment params (type, default) and overrides of the shared defaults.
EXPERIMENT_DEFAULTS = {
    "SpectrumCheck": {
        "params": {"n_realizations": (int, 2000), "n_lags": (int, 64), "lag_max": (float, 20.0),
                   "t0": (float, 0.0)},
        "overrides": {"field": {"n_modes": 256}},
        "tolerances": {"min_fraction_within": 0.95, "n_stderr": 3.0},
    },
    "GroundState": {
        "params": {},
        "overrides": {},
        "tolerances": {"energy_rel": 0.10, "n_stderr": 3.0, "power_rel": 0.15, "max_error": None},
    },
    "Hierarchy": {
        "params": {"t_burn": (_ANY, None), "window": (_ANY, None), "n_realizations": (int, 8),
                   "kernel_lag_max": (float, 20.0), "coefficients": (_ANY, None)},
        "overrides": {},
        "tolerances": {"residual_rel": 0.05, "kernel_abs": 1e-6, "g_at_zero": 1e-10, "slope_rel": 1e-6},
    },
    "Commutator": {
        "params": {"N_min": (int, 2), "N_max": (int, 64), "t": (float, 0.0)},
        "overrides": {},
        "tolerances": {"rel": 1e-12},
    },
    "FieldOperators": {
        "params": {"N": (int, 16), "omegas": (list, [0.5, 1.0, 2.0])},
        "overrides": {},
        "tolerances": {"rel": 1e-12},
    },
    "EnergyBalance": {
        "params": {"N": (int, 16), "simulate": (bool, False)},
        "overrides": {},
        "tolerances": {"rel": 1e-12, "power_rel": 0.15, "n_stderr": 3.0},
    },
    "CutoffSweep": {
        "params": {"cutoff": (float, 1.0), "lower_fraction": (float, 1e-3)},
        "overrides": {},
        "tolerances": {"rel": 1e-4},
    },
}


# ---------------------------------------------------------------- parsing


def _line_of(text, key):
    if text is None or key is None:
        return None
    needle = f'"{key}"'
    for i, line in enumerate(text.splitlines(), 1):
        if needle in line:
            return i
    return None


def _coerce(path, kind, value, text):
    leaf = path.rsplit(".", 1)[-1]

    def bad(msg):
        return ConfigParseError(msg, field=path, line=_line_of(text, leaf))

    if kind is _ANY:
        if value is None or isinstance(value, (int, float, list)) and not isinstance(value, bool):
            return value
        raise bad(f"expected a number, list or null, got {type(value).__name__}")
    if kind is _PATH:
        if value is None or isinstance(value, str):
            return value
        raise bad(f"expected a path string or null, got {value!r}")
    if kind is bool:
        if isinstance(value, bool):
            return value
        raise bad(f"expected true/false, got {value!r}")
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or value != int(value):
            raise bad(f"expected an integer, got {value!r}")
        return int(value)
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            raise bad(f"expected a finite number, got {value!r}")
        return float(value)
    if kind is str:
        if not isinstance(value, str):
            raise bad(f"expected a string, got {value!r}")
        return value
    if kind is list:
        if not isinstance(value, list):
            raise bad(f"expected a list, got {value!r}")
        return value
    raise AssertionError(kind)


def _merge(path, schema, raw, text, swept):
    """Fill ``raw`` from ``schema``; lists at scalar positions are recorded in ``swept``."""
    if not isinstance(raw, dict):
        raise ConfigParseError("expected an object", field=path or "<root>", line=_line_of(text, path))
    unknown = set(raw) - set(schema)
    if unknown:
        key = sorted(unknown)[0]
        full = f"{path}.{key}" if path else key
        raise ConfigParseError(f"unknown key {key!r}", field=full, line=_line_of(text, key))
    out = {}
    for key, spec in schema.items():
        full = f"{path}.{key}" if path else key
        if isinstance(spec, dict):
            out[key] = _merge(full, spec, raw.get(key, {}), text, swept)
            continue
        kind, default = spec
        if key not in raw:
            out[key] = copy.deepcopy(default)
            continue
        value = raw[key]
        if isinstance(value, list) and kind not in (list, _ANY, _PATH):
            swept[full] = [_coerce(full, kind, v, text) for v in value]
            out[key] = value
        else:
            out[key] = _coerce(full, kind, value, text)
    return out


def _schema_for(experiment):
    ex = EXPERIMENT_DEFAULTS[experiment]
    schema = copy.deepcopy(SCHEMA)
    for section, vals in ex["overrides"].items():
        for key, val in vals.items():
            schema[section][key] = (schema[section][key][0], val)
    schema["params"] = dict(ex["params"])
    schema["tolerances"] = {k: (_ANY, v) for k, v in ex["tolerances"].items()}
    return schema


@dataclass(frozen=True)
class ExperimentConfig:
    """A resolved, fully explicit config.  ``data`` is its JSON form."""

    data: dict

    @property
    def experiment(self) -> str:
        return self.data["experiment"]

    @property
    def seed(self) -> int:
        return self.data["seed"]

    def section(self, name) -> dict:
        return self.data[name]

    def hashable(self) -> dict:
        return {k: v for k, v in self.data.items() if k != "output"}

    @property
    def hash(self) -> str:
        return io.config_hash(self.hashable())

    def to_json(self) -> str:
        return json.dumps(self.data, indent=2, sort_keys=True)

    def with_value(self, path, value) -> "ExperimentConfig":
        data = copy.deepcopy(self.data)
        node = data
        *head, leaf = path.split(".")
        for key in head:
            node = node[key]
        node[leaf] = value
        return ExperimentConfig(data)


def _parse(raw, text=None):
    if not isinstance(raw, dict):
        raise ConfigParseError("config must be a JSON object", field="<root>", line=1 if text else None)
    exp = raw.get("experiment")
    if exp is None:
        raise ConfigParseError("missing experiment name", field="experiment")
    if exp not in EXPERIMENTS:
        raise ConfigParseError(f"unknown experiment {exp!r}; expected one of {', '.join(EXPERIMENTS)}",
                               field="experiment", line=_line_of(text, "experiment"))
    swept = {}
    data = _merge("", _schema_for(exp), raw, text, swept)
    return data, swept


def parse_config(source, *, seed=None) -> ExperimentConfig:
    """Parse a config from a dict or JSON text.  Swept (list) values are rejected.

    Raises
    ------
    ConfigParseError
        With the offending ``field`` and, for JSON text, its ``line``.
    """
    raw, text = _load(source)
    if seed is not None:
        raw["seed"] = int(seed)
    data, swept = _parse(raw, text)
    if swept:
        name = sorted(swept)[0]
        raise ConfigParseError("list value for a scalar setting; use sweep", field=name,
                               line=_line_of(text, name.rsplit(".", 1)[-1]))
    return ExperimentConfig(data)


def _load(source):
    if isinstance(source, dict):
        return copy.deepcopy(source), None
    if isinstance(source, Path):
        source = source.read_text()
    try:
        raw = json.loads(source)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
    return raw, source


def load_config(path, *, seed=None) -> ExperimentConfig:
    return parse_config(Path(path), seed=seed)


# ---------------------------------------------------------------- manifest


@dataclass
class Check:
    value: float
    tolerance: object
    passed: bool
    rule: str


@dataclass
class RunManifest:
    experiment: str
    config_hash: str
    tool_version: str
    seed: int
    wall_time: float
    metrics: dict
    checks: dict
    passed: bool
    outputs: list = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=io._jsonable)

    def without_wall_time(self) -> dict:
        d = self.to_dict()
        d.pop("wall_time")
        return d


def _check(checks, name, value, tol, rule, ok):
    if tol is None:
        return
    checks[name] = Check(float(value), tol, bool(ok), rule)


# ---------------------------------------------------------------- scale and field


def _scale(cfg: ExperimentConfig):
    s = cfg.section("scale")
    system = s["system"].lower()
    if system == "natural":
        charge = s["charge"]
        if charge is None:
            charge = math.sqrt(1.5 * s["epsilon"] * s["mass"] * s["c"] ** 3 / s["omega0"])
        return make_scale(charge, s["mass"], s["c"], s["omega0"], s["hbar"])
    if system == "si":
        # Unset constants fall back to the electron; epsilon is implied.
        charge = ELECTRON_CHARGE_G if s["charge"] is None else s["charge"]
        mass = ELECTRON_MASS if s["mass"] == 1.0 else s["mass"]
        c = SPEED_OF_LIGHT if s["c"] == 1.0 else s["c"]
        hbar = HBAR if s["hbar"] == 1.0 else s["hbar"]
        return make_scale(charge, mass, c, s["omega0"], hbar, UnitSystem.SI).natural()
    raise ConfigParseError(f"unknown unit system {s['system']!r}", field="scale.system")


def _field_spec(cfg, scale) -> Optional[FieldSpec]:
    f = cfg.section("field")
    if not f["enabled"]:
        return None
    band = f["bandwidth"] if f["bandwidth"] is not None else resonant_bandwidth(scale, f["delta"])
    return FieldSpec(tuple(band), f["n_modes"], f["spacing"], f["components"], cfg.seed, f["jitter"])


def _t_end(cfg, scale):
    t_end = cfg.section("integrator")["t_end"]
    return 20 * dissipation_time(scale) if t_end is None else float(t_end)


# ---------------------------------------------------------------- experiments


def _spectrum_check(cfg, scale, threads):
    p, tol = cfg.section("params"), cfg.section("tolerances")
    spec = _field_spec(cfg, scale)
    if spec is None:
        raise ConfigParseError("SpectrumCheck needs the field enabled", field="field.enabled")
    lags = np.linspace(0.0, p["lag_max"], p["n_lags"])
    est = estimate_autocorrelation(scale, spec, p["n_realizations"], lags, t0=p["t0"])
    k = tol["n_stderr"]
    frac = est.fraction_within(k)
    metrics = {"fraction_within": frac, "n_lags": int(lags.size), "n_realizations": p["n_realizations"],
               "max_abs_z": float(np.max(np.abs(est.autocorr - est.target) / est.stderr))}
    checks = {}
    _check(checks, "fraction_within", frac, tol["min_fraction_within"], ">=", frac >= tol["min_fraction_within"])
    tables = {"autocorrelation": ("autocorrelation", {
        "lag": lags, "estimate": est.autocorr, "stderr": est.stderr, "target": est.target,
        "within_3se": est.within(k).astype(float)})}
    return metrics, checks, tables, {}


def _exact_damped(scale, w0, x0, p0, t):
    g = scale.tau * w0**2
    wd = math.sqrt(w0**2 - g**2 / 4)
    v0 = p0 / scale.mass
    return np.exp(-0.5 * g * t) * (x0 * np.cos(wd * t) + (v0 + 0.5 * g * x0) / wd * np.sin(wd * t))


def _ground_state(cfg, scale, threads):
    integ, ens, tol = cfg.section("integrator"), cfg.section("ensemble"), cfg.section("tolerances")
    force = ForceModel.harmonic(scale.omega0, scale.mass)
    spec = _field_spec(cfg, scale)
    t_end, dt = _t_end(cfg, scale), integ["dt"]
    if spec is None:
        # Free motion: a single deterministic trajectory against the exact solution.
        x0, p0 = ens["x0"], ens["p0"]
        if x0 == 0 and p0 == 0:
            x0 = 1.0
        traj = integrate_bm(scale, force, None, x0, p0, t_end, dt,
                            radiation_reaction=integ["radiation_reaction"])
        if integ["radiation_reaction"]:
            exact = _exact_damped(scale, scale.omega0, x0, p0, traj.times)
        else:
            w = scale.omega0
            exact = x0 * np.cos(w * traj.times) + p0 / (scale.mass * w) * np.sin(w * traj.times)
        err = float(np.max(np.abs(traj.x[:, 0] - exact)))
        metrics = {"max_error": err, "n_steps": int(round(t_end / dt)), "dt": dt}
        checks = {}
        if tol["max_error"] is not None:
            _check(checks, "max_error", err, tol["max_error"], "<=", err <= tol["max_error"])
        return metrics, checks, {"trajectory": ("trajectory", io.trajectory_columns(traj))}, \
            {"trajectory": {"t": traj.times, "x": traj.x, "p": traj.p}}

    window = None if integ["window_start"] is None else (float(integ["window_start"]), t_end)
    stats = run_ensemble(scale, force, spec, ens["x0"], ens["p0"], t_end, dt, ens["n_traj"], cfg.seed,
                         window=window, n_records=integ["n_records"], threads=threads,
                         radiation_reaction=integ["radiation_reaction"])
    bal = simulate_balance(scale, stats=stats)
    target = 0.5 * scale.hbar * scale.omega0
    ratio = bal.mean_H / target
    k = tol["n_stderr"]
    metrics = {
        "H_over_ground": ratio,
        "mean_H": bal.mean_H,
        "se_H": bal.mean_H_se,
        "absorbed": bal.absorbed,
        "se_absorbed": bal.absorbed_se,
        "radiated": bal.radiated,
        "se_radiated": bal.radiated_se,
        "net": bal.net,
        "se_net": bal.net_se,
        "closed_form_power": bal.closed_form,
        "absorbed_over_closed_form": bal.absorbed / bal.closed_form,
        "radiated_over_closed_form": -bal.radiated / bal.closed_form,
        "window_start": stats.stationary_window[0],
        "window_end": stats.stationary_window[1],
        "n_traj": stats.n_traj,
    }
    checks = {}
    dev = abs(bal.mean_H - target)
    _check(checks, "energy_rel", dev / target, tol["energy_rel"], "<=", dev / target <= tol["energy_rel"])
    _check(checks, "energy_z", dev / bal.mean_H_se, k, "<=", dev <= k * bal.mean_H_se)
    for name, val in (("absorbed_rel", bal.absorbed), ("radiated_rel", -bal.radiated)):
        rel = abs(val - bal.closed_form) / bal.closed_form
        _check(checks, name, rel, tol["power_rel"], "<=", rel <= tol["power_rel"])
    _check(checks, "net_z", abs(bal.net) / bal.net_se, k, "<=", abs(bal.net) <= k * bal.net_se)
    cols = {"t": stats.times, "mean_x": stats.mean_x[:, 0], "se_mean_x": stats.se_mean_x[:, 0],
            "var_x": stats.var_x[:, 0], "se_var_x": stats.se_var_x[:, 0],
            "mean_p": stats.mean_p[:, 0], "se_mean_p": stats.se_mean_p[:, 0],
            "var_p": stats.var_p[:, 0], "se_var_p": stats.se_var_p[:, 0],
            "mean_H": stats.mean_H, "se_mean_H": stats.se_mean_H}
    arrays = {"ensemble": cols, "window": dict(stats.window)}
    return metrics, checks, {"ensemble": ("ensemble", cols)}, arrays


def _hierarchy(cfg, scale, threads):
    p, integ, ens, tol = (cfg.section(n) for n in ("params", "integrator", "ensemble", "tolerances"))
    dt = integ["dt"]
    tau_d = dissipation_time(scale)
    t_burn = 10 * tau_d if p["t_burn"] is None else float(p["t_burn"])
    window = tau_d / 5 if p["window"] is None else float(p["window"])
    if p["coefficients"] is None:
        force = ForceModel.harmonic(scale.omega0, scale.mass)
    else:
        force = ForceModel.polynomial(tuple(p["coefficients"]))
    base = _field_spec(cfg, scale)
    if base is None:
        raise ConfigParseError("Hierarchy needs the field enabled", field="field.enabled")

    num, sq_res, sq_full = 0, 0.0, 0.0
    first = None
    for r in range(p["n_realizations"]):
        modes = base.build(scale, r)
        rep = hierarchy_consistency(scale, force, modes, ens["x0"], ens["p0"], t_burn, window, dt)
        n = rep.full.shape[0]
        sq_res += rep.rms_residual**2 * n
        sq_full += rep.rms_full**2 * n
        num += n
        if first is None:
            first = rep
    pooled = math.sqrt(sq_res / sq_full)

    # Second order on the first realization, from the same anchor.
    s = first.solution
    x2 = second_order_response(scale, force, s.x0_series, s.x1_series, s.times)
    x2_max = float(np.max(np.abs(x2)))

    lags = np.linspace(0.0, p["kernel_lag_max"], 2001)
    metrics = {"pooled_residual_rel": pooled, "n_realizations": p["n_realizations"], "t_burn": t_burn,
               "window": window, "x2_max_abs": x2_max}
    checks = {}
    _check(checks, "residual_rel", pooled, tol["residual_rel"], "<", pooled < tol["residual_rel"])
    if force.kind == "harmonic":
        _check(checks, "x2_zero", x2_max, 0.0, "==", x2_max == 0.0)
        closed = build_green_kernel(scale, force, representation="closed_form_sho")
        numeric = build_green_kernel(scale, force, representation="numeric", max_lag=p["kernel_lag_max"])
        Gc, _ = closed.lag_values(lags)
        Gn, Pn = numeric.lag_values(lags)
        kerr = float(np.max(np.abs(Gn - Gc)))
        g0 = float(np.max(np.abs(Gn[0])))
        slope = float(np.max(np.abs(Pn[0] - np.eye(1))))
        metrics.update(kernel_max_error=kerr, kernel_g0=g0, kernel_slope_error=slope)
        _check(checks, "kernel_abs", kerr, tol["kernel_abs"], "<", kerr < tol["kernel_abs"])
        _check(checks, "g_at_zero", g0, tol["g_at_zero"], "<", g0 < tol["g_at_zero"])
        _check(checks, "slope_rel", slope, tol["slope_rel"], "<", slope < tol["slope_rel"])
        kernel_cols = {"lag": lags, "G": Gn[:, 0, 0], "P": Pn[:, 0, 0]}
    else:
        kern = build_green_kernel(scale, force, max_lag=p["kernel_lag_max"])
        G, P = kern.lag_values(lags)
        kernel_cols = {"lag": lags, "G": G[:, 0, 0], "P": P[:, 0, 0]}
    hcols = {"t": s.times, "x_full": first.full[:, 0], "x0": s.x0_series[:, 0], "x1": s.x1_series[:, 0],
             "x2": x2[:, 0], "residual": first.full[:, 0] - s.x0_series[:, 0] - s.x1_series[:, 0]}
    tables = {"hierarchy": ("hierarchy", hcols), "kernel": ("kernel", kernel_cols)}
    return metrics, checks, tables, {"hierarchy": hcols, "kernel": kernel_cols}


def _commutator(cfg, scale, threads):
    p, tol = cfg.section("params"), cfg.section("tolerances")
    hbar, m = scale.hbar, scale.mass
    rows = {"N": [], "max_commutator_error": [], "max_trk_error": [], "max_offdiagonal": []}
    bracket = 0.0
    for N in range(p["N_min"], p["N_max"] + 1):
        mats = sho_response_matrices(scale, scale.omega0, N)
        rep = commutator(mats)
        trk = max(abs(trk_sum(mats, n).value - hbar / (2 * m)) for n in range(N - 1))
        for n in range(N - 1):
            xf, pf = state_forms(mats, n, p["t"])
            bracket = max(bracket, abs(bilinear_form(xf, pf) - 1j * hbar) / hbar)
        rows["N"].append(N)
        rows["max_commutator_error"].append(rep.max_interior_error / hbar)
        rows["max_trk_error"].append(trk / (hbar / (2 * m)))
        rows["max_offdiagonal"].append(rep.max_offdiagonal / hbar)
    metrics = {k: float(max(v)) for k, v in rows.items() if k != "N"}
    metrics["max_bracket_error"] = float(bracket)
    checks = {}
    for name in ("max_commutator_error", "max_trk_error", "max_offdiagonal", "max_bracket_error"):
        _check(checks, name, metrics[name], tol["rel"], "<=", metrics[name] <= tol["rel"])
    return metrics, checks, {"commutator": ("commutator", rows)}, {}


def _field_operators(cfg, scale, threads):
    p, tol = cfg.section("params"), cfg.section("tolerances")
    N, hbar = p["N"], scale.hbar
    rows = {k: [] for k in ("omega", "N", "commutator_error", "lowering_error", "raising_error",
                            "energy_error", "split_error")}
    pairs = []
    directions = [(0, 0, 1), (1, 0, 0), (0, 1, 0)]
    for i, w in enumerate(p["omegas"]):
        w = float(w)
        d = directions[i % 3]
        pol = (1, 0, 0) if d != (1, 0, 0) else (0, 0, 1)
        label = ModeLabel.along(np.asarray(d) * (1 + i // 3), pol, w, scale.c)
        q, pm = build_quadrature_matrices(scale, w, N)
        pair = ladder_from_quadratures(q, pm, scale, w, label)
        pairs.append(pair)
        a, ad = pair.a_mat, pair.adag_mat
        comm = a @ ad - ad @ a
        cerr = float(np.max(np.abs(np.diag(comm)[:-1] - 1)))
        lerr = rerr = 0.0
        for n in range(N - 1):
            v = number_state(N, n)
            low = a @ v
            up = ad @ v
            want_low = math.sqrt(n) * number_state(N, n - 1) if n > 0 else np.zeros(N)
            lerr = max(lerr, float(np.max(np.abs(low - want_low))))
            rerr = max(rerr, float(np.max(np.abs(up - math.sqrt(n + 1) * number_state(N, n + 1)))))
        hs, ha, he = mode_hamiltonians(pair)
        hw = hbar * w
        n = np.arange(N - 1)
        eerr = float(np.max(np.abs(np.diag(hs)[:-1] - (n + 0.5) * hw)) / hw)
        serr = float(max(np.max(np.abs(np.diag(ha)[:-1] - n * hw)), np.max(np.abs(np.diag(he)[:-1] - (n + 1) * hw)),
                         np.max(np.abs(hs - 0.5 * (ha + he)))) / hw)
        for key, val in zip(rows, (w, N, cerr, lerr, rerr, eerr, serr)):
            rows[key].append(val)
    multi = multimode_commutators(pairs)
    metrics = {k: float(max(v)) for k, v in rows.items() if k not in ("omega", "N")}
    metrics["cross_mode_max"] = float(max(np.max(multi.cross_adag), np.max(multi.cross_a)))
    checks = {}
    for name in ("commutator_error", "lowering_error", "raising_error", "energy_error", "split_error"):
        _check(checks, name, metrics[name], tol["rel"], "<=", metrics[name] <= tol["rel"])
    _check(checks, "cross_mode_max", metrics["cross_mode_max"], 0.0, "==", metrics["cross_mode_max"] == 0.0)
    return metrics, checks, {"field_operators": ("field_operators", rows)}, {}


def _energy_balance(cfg, scale, threads):
    p, tol = cfg.section("params"), cfg.section("tolerances")
    N = p["N"]
    mats = sho_response_matrices(scale, scale.omega0, N)
    rows = {k: [] for k in ("n", "absorbed", "radiated", "net", "identity_error", "einstein_sum_error",
                            "A_down", "A_closed_form")}
    reports = {}
    gamma = scale.tau * scale.omega0**2
    for n in range(N - 1):
        ab, rad = absorbed_power(mats, n), radiated_power(mats, n)
        rate, rep = net_rate(mats, n)
        ref = max(abs(ab), abs(rad), abs(rate))
        ident = abs(ab + rad - rate) / ref
        esum = -sum(t.power for t in rep.per_transition)
        eerr = abs(esum - rate) / abs(rate) if rate != 0 else abs(esum)
        A = einstein_A(mats, n, n - 1) if n > 0 else 0.0
        for key, val in zip(rows, (n, ab, rad, rate, ident, eerr, A, n * gamma)):
            rows[key].append(val)
        reports[f"n{n}"] = rep
    a_err = max(abs(a - c) / c for a, c in zip(rows["A_down"][1:], rows["A_closed_form"][1:])) if N > 2 else 0.0
    metrics = {
        "max_identity_error": float(max(rows["identity_error"])),
        "max_einstein_sum_error": float(max(rows["einstein_sum_error"])),
        "max_A_error": float(a_err),
        "ground_net_rate": float(rows["net"][0]),
        "closed_form_power": float(rows["absorbed"][0]),
    }
    checks = {}
    for name in ("max_identity_error", "max_einstein_sum_error", "max_A_error"):
        _check(checks, name, metrics[name], tol["rel"], "<=", metrics[name] <= tol["rel"])
    _check(checks, "ground_net_zero", abs(metrics["ground_net_rate"]), 0.0, "==", metrics["ground_net_rate"] == 0.0)
    jsons = {"balance_reports": {k: r.to_dict() for k, r in reports.items()}}
    texts = {"balance_reports": "\n\n".join(r.table() for r in reports.values())}
    if p["simulate"]:
        integ, ens = cfg.section("integrator"), cfg.section("ensemble")
        spec = _field_spec(cfg, scale)
        t_end = _t_end(cfg, scale)
        window = None if integ["window_start"] is None else (float(integ["window_start"]), t_end)
        force = ForceModel.harmonic(scale.omega0, scale.mass)
        stats = run_ensemble(scale, force, spec, 0.0, 0.0, t_end, integ["dt"], ens["n_traj"], cfg.seed,
                             window=window, n_records=integ["n_records"], threads=threads,
                             radiation_reaction=integ["radiation_reaction"])
        bal = simulate_balance(scale, stats=stats)
        cf = bal.closed_form
        metrics.update(sim_absorbed=bal.absorbed, sim_radiated=bal.radiated, sim_net=bal.net,
                       sim_net_se=bal.net_se)
        if cf > 0:
            for name, val in (("sim_absorbed_rel", bal.absorbed), ("sim_radiated_rel", -bal.radiated)):
                rel = abs(val - cf) / cf
                _check(checks, name, rel, tol["power_rel"], "<=", rel <= tol["power_rel"])
        k = tol["n_stderr"]
        ok = abs(bal.net) <= k * bal.net_se if bal.net_se > 0 else bal.net == 0
        _check(checks, "sim_net_z", abs(bal.net) / bal.net_se if bal.net_se > 0 else 0.0, k, "<=", ok)
        jsons["balance_comparison"] = {**bal.to_dict(), "config_hash": cfg.hash}
    return metrics, checks, {"energy_balance": ("energy_balance", rows)}, {}, jsons, texts


def _cutoff_sweep(cfg, scale, threads):
    p, tol, f = cfg.section("params"), cfg.section("tolerances"), cfg.section("field")
    cutoff = p["cutoff"]
    lo = cutoff * p["lower_fraction"]
    spec = FieldSpec((lo, cutoff), f["n_modes"], f["spacing"], 1, cfg.seed, f["jitter"])
    modes = spec.build(scale, 0)
    # u = (<E^2> + <B^2>) / 8 pi with three equal components each.
    synth = 3 * modes.variance / (4 * math.pi)
    closed = vacuum_energy_density(scale, cutoff) - vacuum_energy_density(scale, lo)
    rel = abs(synth - closed) / closed
    metrics = {"cutoff": cutoff, "closed_form": closed, "synthesized": synth, "relative_error": rel,
               "full_band_closed_form": vacuum_energy_density(scale, cutoff)}
    checks = {}
    _check(checks, "relative_error", rel, tol["rel"], "<=", rel <= tol["rel"])
    cols = {"cutoff": [cutoff], "closed_form": [closed], "synthesized": [synth], "relative_error": [rel]}
    return metrics, checks, {"cutoff": ("cutoff", cols)}, {}


_RUNNERS = {
    "SpectrumCheck": _spectrum_check,
    "GroundState": _ground_state,
    "Hierarchy": _hierarchy,
    "Commutator": _commutator,
    "FieldOperators": _field_operators,
    "EnergyBalance": _energy_balance,
    "CutoffSweep": _cutoff_sweep,
}


# ---------------------------------------------------------------- run / sweep


def default_out_dir() -> Path:
    return Path(os.environ.get(ENV_OUT, DEFAULT_OUT))


def run(config, out_dir=None, *, threads=1, write=True) -> RunManifest:
    """Run one experiment and (optionally) write its outputs and manifest.

    Outputs go to ``<out_dir>/<experiment>-<hash[:12]>/``.  ``out_dir``
    defaults to ``output.dir`` in the config, then ``$SEDLAB_OUT``, then
    ``./sedlab_out``.

    Raises
    ------
    ConfigParseError
    ExperimentError
        Wrapping any module error.
    """
    cfg = config if isinstance(config, ExperimentConfig) else parse_config(config)
    start = time.perf_counter()
    try:
        scale = _scale(cfg)
        result = _RUNNERS[cfg.experiment](cfg, scale, int(threads))
    except (ConfigParseError, ExperimentError):
        raise
    except (SedlabError, ValueError, FloatingPointError) as exc:
        raise ExperimentError(cfg.experiment, exc) from exc
    metrics, checks, tables, arrays = result[:4]
    jsons = result[4] if len(result) > 4 else {}
    texts = result[5] if len(result) > 5 else {}
    wall = time.perf_counter() - start

    h = cfg.hash
    manifest = RunManifest(
        experiment=cfg.experiment,
        config_hash=h,
        tool_version=__version__,
        seed=cfg.seed,
        wall_time=wall,
        metrics=_plain(metrics),
        checks={k: asdict(v) for k, v in checks.items()},
        passed=all(c.passed for c in checks.values()),
        config=cfg.data,
    )
    if not write:
        return manifest

    base = Path(out_dir) if out_dir is not None else (
        Path(cfg.section("output")["dir"]) if cfg.section("output")["dir"] else default_out_dir())
    dest = base / f"{cfg.experiment}-{h[:12]}"
    formats = set(cfg.section("output")["formats"])
    tags = {"config_hash": h, "seed": cfg.seed, "experiment": cfg.experiment}
    outputs = []
    if "csv" in formats:
        for name, (kind, cols) in tables.items():
            outputs.append(io.write_csv(dest / f"{name}.csv", kind, cols, tags))
    if "npz" in formats:
        for name, cols in arrays.items():
            outputs.extend(io.write_columnar(dest / name, cols, {**tags, "config": cfg.data}))
    for name, obj in jsons.items():
        outputs.append(io.write_json(dest / f"{name}.json", {**io._tags(tags), "data": obj}))
    for name, text in texts.items():
        head = "\n".join(f"# {k}={v}" for k, v in sorted(io._tags(tags).items()))
        p = dest / f"{name}.txt"
        p.write_text(head + "\n" + text + "\n")
        outputs.append(p)
    io.write_json(dest / "config.json", cfg.data)
    manifest.outputs = sorted(str(p.relative_to(dest)) for p in outputs) + ["config.json", "manifest.json"]
    io.write_json(dest / "manifest.json", manifest.to_dict())
    return manifest


def _plain(d):
    out = {}
    for k, v in d.items():
        if isinstance(v, np.generic):
            v = v.item()
        out[k] = v
    return out


def swept_axes(source) -> dict:
    """Map of dotted path to value list for every list-valued scalar setting."""
    raw, text = _load(source)
    return _parse(raw, text)[1]


def _resolve_axis(swept, axis):
    if axis is None:
        return next(iter(swept))
    if axis in swept:
        return axis
    matches = [k for k in swept if k.rsplit(".", 1)[-1] == axis]
    if len(matches) == 1:
        return matches[0]
    raise ConfigParseError(f"axis {axis!r} is not a swept setting; swept: {sorted(swept)}", field=axis)


@dataclass
class SweepResult:
    axis: str
    values: list
    manifests: list
    slopes: dict
    csv_path: Optional[Path] = None

    @property
    def passed(self) -> bool:
        return all(m.passed for m in self.manifests)


def sweep(source, axis=None, out_dir=None, *, threads=1, seed=None, write=True) -> SweepResult:
    """Run the experiment once per value of the single swept axis.

    Writes ``sweep-<axis>.csv`` (one row per point, in order) and
    ``sweep-<axis>.json`` with the log-log slope of each positive metric
    against the axis.

    Raises
    ------
    MultipleSweptAxes, EmptySweep, ConfigParseError
    """
    raw, text = _load(source)
    if seed is not None:
        raw["seed"] = int(seed)
    data, swept = _parse(raw, text)
    if len(swept) > 1:
        raise MultipleSweptAxes(f"exactly one swept axis allowed, found {sorted(swept)}")
    if not swept:
        if axis is None:
            raise EmptySweep("config has no list-valued setting to sweep")
        raise EmptySweep(f"axis {axis!r} is not a list in this config")
    name = _resolve_axis(swept, axis)
    values = swept[name]
    if not values:
        raise EmptySweep(f"sweep over {name!r} has no values")
    base = ExperimentConfig(data)
    manifests = []
    for v in values:
        cfg = base.with_value(name, v)
        manifests.append(run(cfg, out_dir, threads=threads, write=write))

    slopes = {}
    numeric = all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in values)
    keys = [k for k in manifests[0].metrics if all(
        isinstance(m.metrics.get(k), (int, float)) and not isinstance(m.metrics.get(k), bool) for m in manifests)]
    if numeric and len(values) >= 2:
        xv = np.asarray(values, float)
        for k in keys:
            yv = np.asarray([m.metrics[k] for m in manifests], float)
            if np.all(xv > 0) and np.all(yv > 0) and np.ptp(xv) > 0:
                slopes[k] = float(np.polyfit(np.log(xv), np.log(yv), 1)[0])
    result = SweepResult(name, list(values), manifests, slopes)
    if write:
        dest = Path(out_dir) if out_dir is not None else (
            Path(base.section("output")["dir"]) if base.section("output")["dir"] else default_out_dir())
        cols = {name: values if numeric else list(range(len(values))),
                "passed": [float(m.passed) for m in manifests]}
        for k in keys:
            cols[k] = [m.metrics[k] for m in manifests]
        tags = {"experiment": base.experiment, "axis": name, "seed": base.seed,
                "config_hashes": [m.config_hash for m in manifests]}
        stem = f"sweep-{name}"
        result.csv_path = io.write_csv(dest / f"{stem}.csv", "sweep", cols, tags)
        io.write_json(dest / f"{stem}.json", {**io._tags(tags), "values": values, "slopes": slopes,
                                              "passed": result.passed})
    return result
