"""
Channel-coding-rate subproblem for fixed beams and a fixed source codec.

With auxiliaries ``rho_hat = log10 rho_b`` and ``exp(nu)`` equal to the
channel-distortion term, the problem becomes

    min   10 ** (Ds_hat + exp(nu))
    s.t.  U(R_c) <= rho_hat
          -exp(nu - beta1) - exp(nu) + Dc_hat <= 0,  beta1 = E1 (rho_hat - E2)
          R_s / E_a_max <= R_c <= C(gamma)

``U`` is the log-BER with unit dispersion. Both non-convex left-hand sides
are replaced by first-order upper models around the current iterate (SCA),
which keeps every iterate feasible and the objective non-increasing.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import link
from .errors import MaxIter, RateInfeasible

LN2 = math.log(2.0)
RHO_HAT_FLOOR = math.log10(link.BER_FLOOR)
RHO_HAT_CEIL = math.log10(link.BER_CEIL)


@dataclass(frozen=True)
class RateIterate:
    R_c: float
    nu: float
    rho_hat: float
    beta1: float
    objective: float


@dataclass
class ScaTrace:
    iterates: list = field(default_factory=list)
    residuals: list = field(default_factory=list)  # (|U(R_c) - rho_hat|, distortion-constraint gap)

    def objectives(self):
        return [it.objective for it in self.iterates]

    def to_dict(self):
        return {
            "R_c": [it.R_c for it in self.iterates],
            "nu": [it.nu for it in self.iterates],
            "rho_hat": [it.rho_hat for it in self.iterates],
            "objective": [it.objective for it in self.iterates],
            "residual_ber": [r[0] for r in self.residuals],
            "residual_distortion": [r[1] for r in self.residuals],
        }


def _psi(R_c, gamma, L):
    return math.sqrt(L) * (float(link.capacity(gamma)) - R_c) * LN2


def log10_ber_unit_dispersion(R_c, gamma, L):
    """``U(R_c)``: unclamped log10 BER with the dispersion term set to one."""
    return link.log_q_function(_psi(R_c, gamma, L)) * link.LOG10E - math.log10(R_c * L)


def u1_linearized(R_c, iterate_prev, gamma, L):
    """Convex upper model of ``U`` anchored at ``iterate_prev.R_c``.

    ``log10 Q`` is concave in its argument, so its tangent is an upper bound;
    the ``-log10(R_c L)`` part is kept exact.
    """
    psi_hat = _psi(iterate_prev.R_c, gamma, L)
    psi = _psi(R_c, gamma, L)
    return (
        link.log_q_function(psi_hat) * link.LOG10E
        - math.log10(R_c * L)
        - link.hazard(psi_hat) * (psi - psi_hat) * link.LOG10E
    )


def u2_linearized(nu, rho_hat, iterate_prev, model):
    """Affine upper model of ``-exp(nu - beta1) - exp(nu) + Dc_hat``."""
    nu_i, rho_i = iterate_prev.nu, iterate_prev.rho_hat
    a = math.exp(nu_i - model.E1 * (rho_i - model.E2))
    b = math.exp(nu_i)
    return (
        -a * (nu - nu_i - model.E1 * (rho_hat - rho_i) + 1.0)
        - b * (nu - nu_i + 1.0)
        + model.Dc_hat
    )


def distortion_constraint(nu, rho_hat, model):
    """Left-hand side ``-exp(nu - beta1) - exp(nu) + Dc_hat`` (feasible when <= 0)."""
    beta1 = model.E1 * (rho_hat - model.E2)
    return -math.exp(nu - beta1) - math.exp(nu) + model.Dc_hat


def _iterate(R_c, rho_hat, nu, model):
    beta1 = model.E1 * (rho_hat - model.E2)
    obj = 10.0 ** (model.Ds_hat + (math.exp(nu) if nu > -math.inf else 0.0))
    return RateIterate(R_c=float(R_c), nu=float(nu), rho_hat=float(rho_hat), beta1=float(beta1), objective=obj)


def _nu_for(rho_hat, model):
    """``nu`` making the distortion constraint tight at ``rho_hat``."""
    if model.Dc_hat <= 0:
        return -math.inf
    z = model.E1 * (rho_hat - model.E2)
    # log(Dc / (1 + exp(-z))) evaluated without overflow
    return math.log(model.Dc_hat) - (np.logaddexp(0.0, -z))


def _rate_for_rho(target, R_lo, R_hi, gamma, L, anchor=None):
    """Largest R_c in [R_lo, R_hi] with U (or its upper model) <= target."""
    f = (lambda r: log10_ber_unit_dispersion(r, gamma, L) - target) if anchor is None else (
        lambda r: u1_linearized(r, anchor, gamma, L) - target)
    if f(R_hi) <= 0:
        return R_hi
    if f(R_lo) > 0:
        return R_lo
    return brentq(f, R_lo, R_hi, xtol=1e-14, rtol=1e-15)


def solve_rate(model, gamma, L, E_a_max, tol=1e-6, max_outer=50, R_c0=None):
    """SCA over ``(R_c, nu, rho_hat)``; returns ``(RateIterate, ScaTrace)``."""
    C = float(link.capacity(gamma))
    R_lo = model.R_s / E_a_max
    R_hi = C
    if R_lo > R_hi:
        raise RateInfeasible(f"C(gamma)={C:.6g} below minimum rate R_s/E_a_max={R_lo:.6g}")
    trace = ScaTrace()

    if model.Dc_hat <= 0:
        # distortion is BER-insensitive: keep the fewest channel uses
        rho = min(max(log10_ber_unit_dispersion(R_hi, gamma, L), RHO_HAT_FLOOR), RHO_HAT_CEIL)
        it = _iterate(R_hi, rho, -math.inf, model)
        trace.iterates.append(it)
        trace.residuals.append((0.0, 0.0))
        return it, trace

    R_c = 0.5 * (R_lo + R_hi) if R_c0 is None else min(max(R_c0, R_lo), R_hi)
    rho = min(max(log10_ber_unit_dispersion(R_c, gamma, L), RHO_HAT_FLOOR), RHO_HAT_CEIL)
    cur = _iterate(R_c, rho, _nu_for(rho, model), model)
    trace.iterates.append(cur)
    trace.residuals.append(_residuals(cur, gamma, L, model))
    k = math.sqrt(L) * LN2

    for _ in range(max_outer):
        a_hat = link.hazard(_psi(cur.R_c, gamma, L))
        # U1 is convex with stationary point 1 / (a_hat * sqrt(L) ln2)
        R_star = min(max(1.0 / (a_hat * k), R_lo), R_hi)
        rho_new = u1_linearized(R_star, cur, gamma, L)
        if rho_new < RHO_HAT_FLOOR:
            rho_new = RHO_HAT_FLOOR
            R_star = _rate_for_rho(RHO_HAT_FLOOR, R_star, R_hi, gamma, L, anchor=cur)
        rho_new = min(rho_new, RHO_HAT_CEIL)
        # U2 is decreasing in nu: tight at the optimum
        a = math.exp(cur.nu - cur.beta1)
        b = math.exp(cur.nu)
        nu_new = cur.nu + (a * model.E1 * (rho_new - cur.rho_hat) - a - b + model.Dc_hat) / (a + b)
        nxt = _iterate(R_star, rho_new, nu_new, model)
        if nxt.objective > cur.objective:
            # accept only descent; the convex model guarantees it up to rounding
            nxt = cur
        trace.iterates.append(nxt)
        res = _residuals(nxt, gamma, L, model)
        trace.residuals.append(res)
        rel = abs(cur.objective - nxt.objective) / cur.objective
        cur = nxt
        if rel <= tol and res[0] <= 1e-6 and res[1] <= 1e-6 * model.Dc_hat:
            if cur.rho_hat <= RHO_HAT_FLOOR:
                # flat objective on the floor: keep the fewest channel uses
                R_top = _rate_for_rho(RHO_HAT_FLOOR, cur.R_c, R_hi, gamma, L)
                if R_top > cur.R_c:
                    cur = _iterate(R_top, cur.rho_hat, cur.nu, model)
                    trace.iterates.append(cur)
                    trace.residuals.append(_residuals(cur, gamma, L, model))
            return cur, trace
    raise MaxIter(f"rate SCA did not converge in {max_outer} iterations", best=(cur, trace))


def _residuals(it, gamma, L, model):
    U = max(log10_ber_unit_dispersion(it.R_c, gamma, L), RHO_HAT_FLOOR)
    r1 = abs(min(U, RHO_HAT_CEIL) - it.rho_hat)
    r2 = abs(math.exp(it.nu) + math.exp(it.nu - it.beta1) - model.Dc_hat)
    return (float(r1), float(r2))
