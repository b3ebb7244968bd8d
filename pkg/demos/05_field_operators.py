"""
Field modes as ladders
======================

A single field mode couples each state only to its two neighbours.  Building
the quadrature matrices from that rule gives the usual ladder operators and
the three orderings of the mode Hamiltonian.
"""

import numpy as np

import sedlab
from sedlab.field_quantization import expectation, number_state

scale = sedlab.natural_scale(1e-3)
q, p = sedlab.build_quadrature_matrices(scale, 2.0, 6)
pair = sedlab.ladder_from_quadratures(q, p, scale, 2.0)
a, ad = pair.a_mat, pair.adag_mat

print("a |3> =", np.round(a @ number_state(6, 3), 6))
print("diag [a, a^dag] =", np.round(np.diag(a @ ad - ad @ a).real, 12))

hs, ha, he = sedlab.mode_hamiltonians(pair)
for n in range(5):
    print(f"n={n}  sym {expectation(hs, n).real:.2f}  absorb {expectation(ha, n).real:.2f}"
          f"  emit {expectation(he, n).real:.2f}")

# Modes with different (k, polarization) commute exactly.
other = sedlab.ModeLabel.along((1, 0, 0), (0, 1, 0), 1.0)
q2, p2 = sedlab.build_quadrature_matrices(scale, 1.0, 4)
rep = sedlab.multimode_commutators([pair, sedlab.ladder_from_quadratures(q2, p2, scale, 1.0, other)])
print("cross-mode commutators all zero:", rep.passed)
