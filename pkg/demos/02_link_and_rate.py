"""
Finite-blocklength BER and the coding-rate subproblem
=====================================================

Evaluates the normal-approximation BER, then solves the rate subproblem for
each codec in the default bank and compares it with a dense grid.
"""

import numpy as np

from issc import link
from issc.distortion import ModelBank
from issc.rate_sca import solve_rate

L = 256
gamma = 10 ** (29.3 / 10)
C = float(link.capacity(gamma))
print(f"SINR 29.3 dB -> capacity {C:.4f} bit/use")
for R in (0.5 * C, 0.8 * C, 0.95 * C, C):
    print(f"  R_c={R:7.4f}  BER={link.ber(gamma, R, L):.3e}")

###############################################################################
# The solver picks the coding rate that minimises end-to-end distortion.
for model in ModelBank.default():
    if model.R_s > C:
        print(f"R_s={model.R_s:4.1f}: infeasible at this SINR")
        continue
    it, trace = solve_rate(model, gamma, L, E_a_max=1.0)
    R = np.linspace(model.R_s, C, 10_000)
    grid = np.min(model(link.ber(gamma, R, L, exact_dispersion=False)))
    print(f"R_s={model.R_s:4.1f}: R_c={it.R_c:.4f} D_o={it.objective:.5e} "
          f"grid={grid:.5e} iterations={len(trace.iterates)}")
