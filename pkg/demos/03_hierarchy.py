"""
Perturbative hierarchy
======================

Split the motion into a free part x0, the linear response x1 to the field,
and a second-order correction x2.  For a harmonic force x1 is a convolution
with the Green kernel sin(omega0 s) / (m omega0) and x2 vanishes.
"""

import numpy as np

import sedlab

scale = sedlab.natural_scale(1e-3)
force = sedlab.ForceModel.harmonic()

# The numerically built kernel agrees with the closed form.
numeric = sedlab.build_green_kernel(scale, force, representation="numeric", max_lag=30.0)
lags = np.linspace(0, 30, 301)
G, P = numeric.lag_values(lags)
print("max |G - sin| =", np.max(np.abs(G[:, 0, 0] - np.sin(lags))))

# Compare x0 + x1 with the full simulation in a short window.
tau_d = sedlab.dissipation_time(scale)
modes = sedlab.FieldSpec(sedlab.zpf.resonant_bandwidth(scale), 2000, jitter=False).build(scale, 0)
rep = sedlab.hierarchy_consistency(scale, force, modes, 0.0, 0.0, 10 * tau_d, tau_d / 5, 0.2)
print(f"relative RMS residual of x0 + x1: {rep.relative_residual:.2%}")

# A cubic term in the force switches x2 on.
cubic = sedlab.ForceModel.polynomial((0.0, -1.0, 0.0, -0.05))
sol = sedlab.solve_hierarchy(scale, cubic, modes, 1.0, 0.0, 200.0, 0.1)
print("max |x2| with a cubic force:", float(np.max(np.abs(sol.x2_series))))
