"""
The oscillator settles at hbar omega0 / 2
=========================================

A charged harmonic oscillator is driven by the random field and damped by
its own radiation.  Whatever state it starts in, after a few dissipation
times its mean energy approaches hbar omega0 / 2.
"""

import sedlab

scale = sedlab.natural_scale(1e-3)
tau_d = sedlab.dissipation_time(scale)
force = sedlab.ForceModel.harmonic()
spec = sedlab.FieldSpec(sedlab.zpf.resonant_bandwidth(scale), 1000, jitter=False)

# A small ensemble keeps this demo to a few seconds; the acceptance run uses 200.
window = (10 * tau_d, 15 * tau_d)
hot = sedlab.run_ensemble(scale, force, spec, 3.0, 0.0, 15 * tau_d, 0.2, 32, base_seed=1, window=window)
cold = sedlab.run_ensemble(scale, force, spec, 0.0, 0.0, 15 * tau_d, 0.2, 32, base_seed=2, window=window)

# The energy relaxes on the tau_d scale.
for i in range(0, hot.times.size, hot.times.size // 6):
    print(f"t = {hot.times[i]:8.0f}   <H> hot {hot.mean_H[i]:.3f}   cold {cold.mean_H[i]:.3f}")

for name, st in (("hot", hot), ("cold", cold)):
    H, se = st.window_mean("H")
    print(f"{name:4s} stationary <H> = {H:.4f} +/- {se:.4f}   (hbar w0 / 2 = 0.5)")

# Power balance in the window: what the field feeds in, radiation takes out.
bal = sedlab.simulate_balance(scale, stats=cold)
print(f"absorbed {bal.absorbed:.3e}  radiated {bal.radiated:.3e}  closed form {bal.closed_form:.3e}")
