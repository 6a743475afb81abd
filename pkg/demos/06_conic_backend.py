"""
The small conic solver
======================

A trace-of-inverse bound written as a Schur-complement LMI, and a complex
Hermitian LMI passed through the real embedding.
"""

import numpy as np

from issc.conic import AffineMatrix, ConicProblem, realify_lmi, solve, trace_inverse_epigraph

# smallest scaling t with Tr((t Omega)^-1) <= 3
Omega = np.diag([1.0, 4.0])
p = ConicProblem()
t = p.add_real("t")
trace_inverse_epigraph(p, AffineMatrix(np.zeros((2, 2)), {int(t[0]): Omega}), 3.0)
p.add_linear_objective({int(t[0]): 1.0})
sol = solve(p)
print(f"t* = {sol.values['t'][0]:.8f} (exact {1.25 / 3:.8f}), status {sol.status.value}")

###############################################################################
# largest eigenvalue of a complex Hermitian matrix as min s with s I - M >= 0
rng = np.random.default_rng(1)
X = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
M = X + X.conj().T
p = ConicProblem()
s = p.add_real("s")
p.add_lmi(realify_lmi({"const": -M, "terms": {int(s[0]): np.eye(3, dtype=complex)}}))
p.add_linear_objective({int(s[0]): 1.0})
print(f"lambda_max via SDP {solve(p).objective:.8f}, via eigvalsh {np.linalg.eigvalsh(M).max():.8f}")
