"""
Replacing a tunable phase with fixed encodings
==============================================

A weight w in front of the data turns the encoding into e^{i w x Z}.  Here it
is rebuilt from encodings with a fixed frequency and trainable rotations only.
"""

import numpy as np

from requp.compiler import approx_weight_gate, gate_frobenius_errors
from requp.fourier import aux_coefficients, cesaro_mean, error_bound, sup_error

###############################################################################
# The remainder after removing whole multiples of pi is approximated by a
# Cesaro mean of its mirrored Fourier series.  The error drops like 1/N.

w = 1.0
for N in (16, 64, 256):
    err = sup_error(cesaro_mean(aux_coefficients(w, N), N), w)
    print(f"N={N:4d}  sup error {err:.2e}  bound {error_bound(N).total:.2e}")

###############################################################################
# The weight gate picks the order automatically and verifies the Frobenius
# distance on a grid.

circ, plan = approx_weight_gate(2.5, 0.05)
print(f"K={plan.K}  remainder={plan.remainder:.4f}  N={plan.N}  encodings={plan.encodings}")

x = np.linspace(0, 1, 2001)
print("max Frobenius error on a fresh grid:", gate_frobenius_errors(circ, 2.5, x).max())
