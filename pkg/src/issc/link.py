"""
Communication-link quantities: SINR, capacity and the finite-blocklength
random-coding bit-error approximation.

    rho_b = Q( ln2 * sqrt(L) * (C(gamma) - R_c) / V ) / (R_c * L)

with ``V = sqrt(1 - (1 + gamma)^-2)`` (channel dispersion) or ``V = 1`` in the
simplified form used inside the rate subproblem.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import erfcx, ndtr

BER_FLOOR = 1e-30
BER_CEIL = 0.5
LOG10E = np.log10(np.e)
_SQRT2 = np.sqrt(2.0)
_SQRT_2_OVER_PI = np.sqrt(2.0 / np.pi)


@dataclass(frozen=True)
class BeamPair:
    """Communication beam ``w_c`` and dedicated sensing beam ``w_0``."""

    w_c: np.ndarray
    w_0: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "w_c", np.asarray(self.w_c, dtype=complex).reshape(-1))
        object.__setattr__(self, "w_0", np.asarray(self.w_0, dtype=complex).reshape(-1))
        if self.w_c.shape != self.w_0.shape:
            raise ValueError("beams must have equal length")

    @property
    def Sigma(self):
        return np.outer(self.w_c, self.w_c.conj()) + np.outer(self.w_0, self.w_0.conj())

    @property
    def power(self):
        return float(np.vdot(self.w_c, self.w_c).real + np.vdot(self.w_0, self.w_0).real)

    @property
    def power_comm(self):
        return float(np.vdot(self.w_c, self.w_c).real)

    @property
    def power_sense(self):
        return float(np.vdot(self.w_0, self.w_0).real)

    def stacked(self):
        return np.concatenate([self.w_c, self.w_0])

    @classmethod
    def from_stacked(cls, w):
        n = w.size // 2
        return cls(w[:n].copy(), w[n:].copy())


@dataclass(frozen=True)
class RatePoint:
    R_s: float
    R_c: float
    L: int
    E_a_max: float

    @property
    def E_a(self):
        """Channel uses per source sample."""
        return self.R_s / self.R_c

    @property
    def N_c(self):
        return self.R_c * self.L

    @property
    def feasible(self):
        return self.R_c > 0 and self.E_a <= self.E_a_max * (1 + 1e-12)


def sinr(beams, h_c, sigma_n2):
    sig = abs(np.vdot(h_c, beams.w_c)) ** 2
    intf = abs(np.vdot(h_c, beams.w_0)) ** 2
    return float(sig / (intf + sigma_n2))


def capacity(gamma):
    return np.log2(1.0 + gamma)


def q_function(x):
    """Upper tail of the standard normal, accurate far into both tails."""
    x = np.asarray(x, dtype=float)
    pos = 0.5 * erfcx(np.abs(x) / _SQRT2) * np.exp(-0.5 * x**2)
    out = np.where(x >= 0, pos, 1.0 - pos)
    return out if out.ndim else float(out)


def log_q_function(x):
    """Natural log of Q(x) without underflow for large positive x."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        pos = np.log(0.5) + np.log(erfcx(np.maximum(x, 0.0) / _SQRT2)) - 0.5 * np.maximum(x, 0.0) ** 2
        neg = np.log(ndtr(-np.minimum(x, 0.0)))
    out = np.where(x >= 0, pos, neg)
    return out if out.ndim else float(out)


def hazard(x):
    """Normal hazard phi(x)/Q(x), the magnitude of d ln Q / dx."""
    x = np.asarray(x, dtype=float)
    out = _SQRT_2_OVER_PI / erfcx(x / _SQRT2)
    return out if out.ndim else float(out)


def ber_argument(gamma, R_c, L, exact_dispersion=True):
    C = capacity(gamma)
    if exact_dispersion:
        V = np.sqrt(1.0 - 1.0 / (1.0 + gamma) ** 2)
        V = np.maximum(V, 1e-300)
    else:
        V = 1.0
    return np.log(2.0) * np.sqrt(L) * (C - R_c) / V


def log10_ber_raw(gamma, R_c, L, exact_dispersion=True):
    """log10 of the unclamped approximation."""
    x = ber_argument(gamma, R_c, L, exact_dispersion)
    return log_q_function(x) * LOG10E - np.log10(R_c * L)


def ber(gamma, R_c, L, exact_dispersion=True):
    x = np.asarray(ber_argument(gamma, R_c, L, exact_dispersion), dtype=float)
    RL = np.asarray(R_c, dtype=float) * L
    q = q_function(x)
    # linear form where Q is representable; log form in the deep tail
    with np.errstate(over="ignore"):
        lin = q / RL
        lg = log_q_function(x) * LOG10E - np.log10(RL)
        out = np.where(q > 1e-290, lin, 10.0 ** lg)
    out = np.clip(out, BER_FLOOR, BER_CEIL)
    return out if out.ndim else float(out)
