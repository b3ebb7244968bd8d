"""
Commutator from response coefficients
=====================================

Arrange the stationary response coefficients of the oscillator into
matrices.  Their commutator is i hbar on the diagonal, apart from the last
row, which a truncated matrix cannot get right.
"""

import numpy as np

import sedlab

scale = sedlab.natural_scale(1e-3)
mats = sedlab.sho_response_matrices(scale, 1.0, 6)
np.set_printoptions(precision=3, suppress=True)
print("x =\n", mats.x_mat.real)

rep = sedlab.commutator(mats)
print("diag [x, p] =", np.diag(rep.matrix))
print("max error away from the edge:", rep.max_interior_error)

# The sum rule sum_k omega_kn |x_nk|^2 = hbar / 2m holds row by row.
for n in range(mats.dim):
    r = sedlab.trk_sum(mats, n)
    print(f"n={n}  TRK={r.value:+.3f}{'  (edge)' if r.edge else ''}")

# The same number comes out of a Poisson-type bracket over the mode amplitudes.
from sedlab.matrix_mechanics import state_forms

xf, pf = state_forms(mats, 2, t=3.0)
print("bracket {x_2, p_2} =", sedlab.bilinear_form(xf, pf))
