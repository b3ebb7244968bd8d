"""
Energy balance and emission rates
=================================

In the ground state the field supplies exactly what radiation removes.  In
an excited state the balance is negative and the deficit equals the sum of
hbar omega A over the downward transitions.
"""

import sedlab

scale = sedlab.natural_scale(1e-3)
mats = sedlab.sho_response_matrices(scale, 1.0, 8)

for n in range(4):
    rate, report = sedlab.net_rate(mats, n)
    print(report.table())
    print()

# A_{n,n-1} = n tau omega0^2 for the oscillator.
for n in range(1, 5):
    print(f"A({n}->{n - 1}) / (tau w0^2) = {sedlab.einstein_A(mats, n, n - 1) / scale.gamma:.12f}")
