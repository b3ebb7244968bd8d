"""
Running experiments from configs
================================

Every capability is reachable as a named experiment in a JSON config.  The
same configs drive the ``sedlab`` command line:

    sedlab run config.json --out results --check
    sedlab sweep sweep.json --axis dt

A list in place of a scalar marks the one axis to sweep.
"""

import json
import tempfile
from pathlib import Path

import sedlab

out = Path(tempfile.mkdtemp(prefix="sedlab-demo-"))

manifest = sedlab.run({"experiment": "Commutator", "params": {"N_max": 16}}, out)
print(manifest.experiment, "passed" if manifest.passed else "FAILED", manifest.config_hash[:12])
print(json.dumps(manifest.metrics, indent=2))

# Integrator order from a dt sweep on the free, undamped oscillator.
cfg = {
    "experiment": "GroundState",
    "field": {"enabled": False},
    "integrator": {"t_end": 100.0, "radiation_reaction": False, "dt": [0.3, 0.15, 0.075]},
}
res = sedlab.sweep(cfg, "dt", out)
print("error vs dt slope:", round(res.slopes["max_error"], 3))
print("combined CSV:", res.csv_path)
print("outputs under", out)
