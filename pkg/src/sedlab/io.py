"""File output: tagged CSV tables, columnar ``.npz`` dumps with a JSON sidecar.

Every file carries the config hash, seed and tool version.  CSV values are
written with 17 significant digits so they round-trip bit-exactly.
"""

from __future__ import annotations

import hashlib
import json
from importlib import resources
from pathlib import Path

import numpy as np

from ._version import __version__

CSV_SCHEMA_VERSION = 1


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_hash(obj) -> str:
    """SHA-256 of the canonical JSON form of ``obj``."""
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


def load_csv_schema() -> dict:
    return json.loads(resources.files("sedlab").joinpath("schemas/csv_columns.json").read_text())


def _tags(meta):
    base = {"tool_version": __version__}
    base.update(meta or {})
    return base


def write_csv(path, kind, columns: dict, meta=None):
    """Write equal-length 1-d ``columns`` with a ``#`` header block."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(columns)
    data = np.column_stack([np.asarray(columns[n], dtype=float) for n in names])
    lines = [f"# sedlab-csv v{CSV_SCHEMA_VERSION} kind={kind}"]
    lines += [f"# {k}={json.dumps(v, sort_keys=True)}" for k, v in sorted(_tags(meta).items())]
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
        fh.write(",".join(names) + "\n")
        np.savetxt(fh, data, delimiter=",", fmt="%.17g")
    return path


def read_csv(path):
    """Inverse of :func:`write_csv`: ``(kind, meta, columns)``."""
    meta, kind = {}, None
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                names = line.strip().split(",")
                break
            body = line[1:].strip()
            if body.startswith("sedlab-csv"):
                kind = body.split("kind=", 1)[1]
            else:
                k, v = body.split("=", 1)
                meta[k] = json.loads(v)
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.size == 0:
        data = np.empty((0, len(names)))
    return kind, meta, {n: data[:, i] for i, n in enumerate(names)}


def trajectory_columns(traj) -> dict:
    d = traj.x.shape[1]
    cols = {"t": traj.times}
    if d == 1:
        cols["x"], cols["p"] = traj.x[:, 0], traj.p[:, 0]
    else:
        cols.update({f"x_{i}": traj.x[:, i] for i in range(d)})
        cols.update({f"p_{i}": traj.p[:, i] for i in range(d)})
    return cols


def write_trajectory_csv(path, traj, config_hash_=None):
    meta = {"config_hash": config_hash_, "seed": traj.seed, "realization": traj.realization}
    return write_csv(path, "trajectory", trajectory_columns(traj), meta)


def write_columnar(path, columns: dict, meta=None):
    """``<path>.npz`` of the arrays plus ``<path>.json`` with metadata and column list."""
    path = Path(path).with_suffix("")
    path.parent.mkdir(parents=True, exist_ok=True)
    arrays = {k: np.asarray(v) for k, v in columns.items()}
    np.savez(path.with_suffix(".npz"), **arrays)
    side = _tags(meta)
    side["columns"] = {k: {"dtype": str(a.dtype), "shape": list(a.shape)} for k, a in arrays.items()}
    path.with_suffix(".json").write_text(json.dumps(side, indent=2, sort_keys=True, default=_jsonable))
    return path.with_suffix(".npz"), path.with_suffix(".json")


def read_columnar(path):
    path = Path(path).with_suffix("")
    with np.load(path.with_suffix(".npz")) as z:
        arrays = {k: z[k] for k in z.files}
    return arrays, json.loads(path.with_suffix(".json").read_text())


def write_trajectory_npz(path, traj, config_hash_=None):
    meta = {"config_hash": config_hash_, "seed": traj.seed, "realization": traj.realization,
            **traj.metadata}
    return write_columnar(path, {"t": traj.times, "x": traj.x, "p": traj.p}, meta)


def write_kernel_csv(path, kernel, h, n, meta=None):
    """Tabulate a 1-d kernel on lags ``0, h, ..., (n-1) h``."""
    lags = h * np.arange(n)
    G, P = kernel.lag_values(lags)
    return write_csv(path, "kernel", {"lag": lags, "G": G[:, 0, 0], "P": P[:, 0, 0]}, meta)


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")
    return path
