"""
Compiling a tunable-weight model
================================

Every weight gate of a small model is swapped for a fixed-encoding block.
The compile report checks the whole circuit against the original model.
"""

import numpy as np

from requp.circuit import WModel, eval_h_batch, eval_wmodel_batch, resource_count
from requp.compiler import compile_wmodel, fit_wmodel

###############################################################################
# Fit a two-layer model to a target on [0, 1].

x = np.linspace(0, 1, 128)
target = np.exp(1j * np.pi * x**2) * 0.9
wm = fit_wmodel(x, target, 2, seed=0, n_starts=8)
print("fit MSE:", wm.meta["residual"])
print("weights:", wm.weights.ravel())

###############################################################################
# Compile at eps = 0.05 with the uniform per-gate budget.

circ, rep = compile_wmodel(wm, 0.05)
print("per-gate errors:", rep.per_gate_errors.ravel())
print(f"measured sup {rep.measured_sup:.3e}  sum of gate errors {rep.per_gate_sum:.3e}")
print("encodings per coordinate:", resource_count(circ)["encodings_per_coord"])

gap = np.abs(eval_h_batch(circ, x) - eval_wmodel_batch(wm, x)).max()
print("gap on the fitting points:", gap)

###############################################################################
# A two-coordinate model works the same way on a tensor grid.

wm2 = WModel([0.3, -0.2], [0.5, 0.1], [[2.0, 3.0]], 0.4)
circ2, rep2 = compile_wmodel(wm2, 0.1)
print(f"m=2: measured sup {rep2.measured_sup:.3e} on {len(rep2.grid)} points")
