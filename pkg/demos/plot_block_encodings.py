"""
Many coordinates on one register
================================

With a block-diagonal encoding, each coordinate gets its own 2x2 block.  Two
encodings and a fixed permutation isolate a single block, so a single-qubit
circuit can be lifted without approximation.
"""

import numpy as np

from requp.circuit import CircuitIR, encode, ry, rz
from requp.compiler import approx_weight_gate
from requp.grid import GridSpec
from requp.multiqubit import (
    build_Rk,
    build_Rk_prime,
    compile_multiqubit,
    euler_unitary,
    multiqubit_equivalence,
)

###############################################################################
# The isolated block for coordinate 2 of 3.

x = np.array([0.2, 0.7, 0.4])
print(np.round(np.diag(build_Rk(x, 2)), 6))

###############################################################################
# Lift a circuit that mixes a weight gate on coordinate 1 with raw encodings.

gate, _ = approx_weight_gate(1.7, 0.1, coord=1, arg_dim=3)
single = CircuitIR(2, 3, (encode(0), rz(0.3)) + gate.gates + (ry(0.2), encode(2, -1)))
lifted = compile_multiqubit(single, "vm")
eq = multiqubit_equivalence(single, lifted, GridSpec(3, 12).points)
print("register dimension:", lifted.dim, " h gap:", eq["h_sup"], " leak:", eq["leak_sup"])

###############################################################################
# The compact (m+1)-level encoding, built literally from circular
# permutations, does not land on the block form.

U, rep = build_Rk_prime(np.array([1.0, 0.0]), 1, return_report=True)
print("vm_prime block diag:", np.round(np.diag(U), 6), " distance:", round(rep["abs_dist"], 3))
print("encodings used:", rep["encodings"], "=", rep["tally"]["formula"])

###############################################################################
# SU(3) from eight Euler angles.

V = euler_unitary((3, np.linspace(0.1, 0.8, 8)))
print("det:", np.linalg.det(V))
