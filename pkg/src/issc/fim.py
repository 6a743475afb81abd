"""
Fisher information of the sensing echo and the hybrid CRB on target position.

Unknowns are the target position ``(o_x, o_y)`` (deterministic) and the
synchronisation offset ``dtau`` (zero-mean Gaussian, std ``sigma_delta``).
On the DFT grid ``w_k = 2 pi k / (N dt)`` the derivative matrices are ::

    Hx_k = dH/dx - j w_k (dtau/dx) H0        Hy_k = dH/dy - j w_k (dtau/dy) H0

and the six Gram-type sums ``zeta_1..zeta_6`` give each FIM entry as
``(2 / sigma_s^2) Re Tr(zeta_j Sigma)``.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InconsistentFim, UnobservableTarget


@dataclass(frozen=True)
class ZetaSet:
    zeta: tuple  # six (N_T, N_T) complex matrices, index 0 -> zeta_1
    w_grid: np.ndarray

    def __getitem__(self, j):
        """1-based access, ``zs[1]`` is zeta_1."""
        return self.zeta[j - 1]

    def stack(self):
        return np.stack(self.zeta)


@dataclass(frozen=True)
class FimBlocks:
    J_c1: np.ndarray  # (2, 2) position block
    J_c2: np.ndarray  # (2,) position/offset coupling
    J_c3: float  # observed offset information
    J_B_c3: float  # prior offset information, 1/sigma_delta^2 (inf for perfect sync)

    @property
    def J_offset(self):
        return self.J_c3 + self.J_B_c3

    def full(self):
        """3x3 hybrid FIM; only meaningful for finite prior information."""
        J = np.zeros((3, 3))
        J[:2, :2] = self.J_c1
        J[:2, 2] = self.J_c2
        J[2, :2] = self.J_c2
        J[2, 2] = self.J_offset
        return J


@dataclass(frozen=True)
class HcrbReport:
    crb_matrix: np.ndarray
    hcrb_matrix: np.ndarray
    penalty_matrix: np.ndarray

    @property
    def trace_crb(self):
        return float(np.trace(self.crb_matrix))

    @property
    def trace_hcrb(self):
        return float(np.trace(self.hcrb_matrix))


def frequency_grid(N, dt):
    return 2 * np.pi * np.arange(N) / (N * dt)


def build_zeta(sense, scene):
    w = frequency_grid(scene.N, scene.dt)
    # moments of the grid; fsum keeps the reduction order-independent
    S0 = float(scene.N)
    S1 = math.fsum(w)
    S2 = math.fsum(w * w)
    H0, A, B = sense.H0, sense.dH_dx, sense.dH_dy
    a, b = sense.dtau_dx, sense.dtau_dy
    Ah, Bh, Hh = A.conj().T, B.conj().T, H0.conj().T
    HH = Hh @ H0

    z1 = S0 * (Ah @ A) + 1j * a * S1 * (Hh @ A - Ah @ H0) + a * a * S2 * HH
    z2 = S0 * (Ah @ B) - 1j * b * S1 * (Ah @ H0) + 1j * a * S1 * (Hh @ B) + a * b * S2 * HH
    z3 = S0 * (Bh @ B) + 1j * b * S1 * (Hh @ B - Bh @ H0) + b * b * S2 * HH
    z4 = -1j * S1 * (Ah @ H0) + a * S2 * HH
    z5 = -1j * S1 * (Bh @ H0) + b * S2 * HH
    z6 = S2 * HH
    return ZetaSet(zeta=(z1, z2, z3, z4, z5, z6), w_grid=w)


def fim_entries(zeta, Sigma, sigma_s2):
    """The six observed-FIM entries ``(2/sigma_s^2) Re Tr(zeta_j Sigma)``."""
    Z = zeta.stack() if isinstance(zeta, ZetaSet) else np.asarray(zeta)
    tr = np.einsum("jab,ba->j", Z, Sigma)
    return (2.0 / sigma_s2) * tr.real


def prior_information(sigma_delta):
    return math.inf if sigma_delta == 0 else 1.0 / sigma_delta**2


def blocks_from_entries(J, J_B_c3):
    return FimBlocks(
        J_c1=np.array([[J[0], J[1]], [J[1], J[2]]]),
        J_c2=np.array([J[3], J[4]]),
        J_c3=float(J[5]),
        J_B_c3=float(J_B_c3),
    )


def fim_assemble(zeta, Sigma, sigma_s2, sigma_delta):
    J = fim_entries(zeta, Sigma, sigma_s2)
    return blocks_from_entries(J, prior_information(sigma_delta))


def hcrb(blocks):
    """CRB of the position block and its synchronisation penalty.

    ``HCRB = A^-1 + A^-1 b (c - b^T A^-1 b)^-1 b^T A^-1`` with ``A`` the
    position block, ``b`` the coupling and ``c`` observed plus prior offset
    information.
    """
    A = np.asarray(blocks.J_c1, dtype=float)
    ev = np.linalg.eigvalsh(A)
    if not np.all(np.isfinite(ev)) or ev.max() <= 0 or ev.min() <= 1e-13 * ev.max():
        raise UnobservableTarget(f"position FIM block is singular (eigenvalues {ev})")
    crb = np.linalg.inv(A)
    crb = 0.5 * (crb + crb.T)
    b = np.asarray(blocks.J_c2, dtype=float)
    c = blocks.J_offset
    if math.isinf(c) or not np.any(b):
        pen = np.zeros((2, 2))
    else:
        Ab = crb @ b
        schur = c - b @ Ab
        if not schur > 0:
            raise InconsistentFim(f"offset Schur complement {schur} is not positive")
        pen = np.outer(Ab, Ab) / schur
    return HcrbReport(crb_matrix=crb, hcrb_matrix=crb + pen, penalty_matrix=pen)


def hcrb_for_beams(zeta, beams, sigma_s2, sigma_delta):
    return hcrb(fim_assemble(zeta, beams.Sigma, sigma_s2, sigma_delta))


def trace_hcrb_from_entries(J, J_B_c3):
    """Tr(HCRB) for raw FIM entries; ``inf`` where the bound does not exist."""
    try:
        return hcrb(blocks_from_entries(J, J_B_c3)).trace_hcrb
    except (UnobservableTarget, InconsistentFim):
        return math.inf
