"""
Scales and the zero-point field
===============================

Natural units put hbar = m = omega0 = 1.  The only free number left is the
coupling epsilon = tau * omega0, which fixes the charge and the slow
dissipation time 1 / (tau omega0^2).
"""

import numpy as np

import sedlab

scale = sedlab.natural_scale(1e-3)
print("tau        =", scale.tau)
print("tau_d      =", sedlab.dissipation_time(scale))

# A real electron bound at optical frequency has a far smaller coupling.
electron = sedlab.electron_scale(3e15)
print("electron epsilon = %.3e" % electron.epsilon)

# The field is a sum of cosines with random phases.  Only a band around the
# resonance matters, so the default band is omega0 (1 +/- 0.25).
spec = sedlab.FieldSpec(sedlab.zpf.resonant_bandwidth(scale, 0.25), 256, jitter=False)
modes = spec.build(scale, realization=0)
print("modes:", modes.omegas.size, " variance:", modes.variance)

# Realizations come from independent RNG streams keyed by (seed, index),
# so realization 7 is the same no matter how many others were drawn.
seventh = spec.build(scale, realization=7)
assert np.array_equal(seventh.phases, spec.build(scale, realization=7).phases)

# The ensemble autocorrelation should match the discrete target.
lags = np.linspace(0, 20, 32)
est = sedlab.estimate_autocorrelation(scale, spec, 1000, lags)
print("lags within 3 stderr: %.0f%%" % (100 * est.fraction_within(3)))
for lag, got, want in list(zip(lags, est.autocorr, est.target))[:5]:
    print(f"  lag {lag:5.2f}   estimate {got: .3e}   target {want: .3e}")
