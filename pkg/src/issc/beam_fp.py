"""
Beamforming subproblem for a fixed coding rate.

SINR is handled with the quadratic transform

    S(y, w) = 2 Re{y h^H w_c} - |y|^2 (|h^H w_0|^2 + sigma_n^2)

and the HCRB constraint is carried by auxiliary targets ``Gamma_j`` for the
six FIM traces ``f_j(w) = Tr(zeta_j Sigma)``. An alternating loop updates
``y`` in closed form, projects the current traces onto the HCRB-feasible set
(an SDP with a Schur-complement LMI and the trace-inverse epigraph), then
moves the beams on ``-S + F / (2 kappa)`` with a decreasing penalty weight.

All penalty bookkeeping happens in a whitened FIM frame: a fixed
block-triangular congruence that maps the FIM at a reference covariance to
the identity. The congruence keeps the LMI structure intact and makes the
penalty well conditioned even though raw FIM entries span many decades.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import conic, link
from .errors import ConicError, HcrbInfeasible, MaxIter
from .fim import fim_entries, prior_information
from .geometry import steering_vector

_SYM6 = ((0, 0), (0, 1), (1, 1), (0, 2), (1, 2), (2, 2))


def _sym3(v):
    M = np.zeros((3, 3), dtype=np.result_type(v, float))
    for k, (i, j) in enumerate(_SYM6):
        M[i, j] = M[j, i] = v[k]
    return M


def _vec6(M):
    return np.array([M[i, j] for i, j in _SYM6])


def _inv_sqrt(A):
    ev, V = np.linalg.eigh(0.5 * (A + A.T))
    if ev.min() <= 1e-14 * max(ev.max(), 0.0) or ev.max() <= 0:
        return None
    return (V / np.sqrt(ev)) @ V.T


# ---------------------------------------------------------------------------
# FIM frame
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FimFrame:
    """Linear change of FIM coordinates ``J -> K^T J K``.

    ``K = [[P, 0], [q^T, s]]`` is block lower triangular, so the equivalent
    position FIM transforms as ``P EFIM P`` and ``Tr(HCRB) = Tr(W HCRB_frame)``
    with ``W = P^2``.
    """

    coef: float  # 2 / sigma_s^2
    K: np.ndarray
    L: np.ndarray  # frame entries = L @ raw entries
    L_inv: np.ndarray
    prior: float
    prior_frame: np.ndarray

    @property
    def finite_prior(self):
        return math.isfinite(self.prior)

    @property
    def P(self):
        return self.K[:2, :2]

    @property
    def W(self):
        return self.P @ self.P

    def to_frame(self, traces):
        """Raw traces ``Tr(zeta_j Sigma)`` -> frame FIM entries (complex allowed)."""
        return self.L @ (self.coef * np.asarray(traces))

    def from_frame(self, g):
        return (self.L_inv @ np.asarray(g)) / self.coef

    def zeta(self, zeta):
        Z = zeta.stack() if hasattr(zeta, "stack") else np.asarray(zeta)
        return self.coef * np.einsum("kj,jab->kab", self.L, Z)

    def information(self, g):
        """Frame FIM (3x3 with prior, or the 2x2 position block for perfect sync)."""
        g = np.asarray(g, dtype=float)
        if self.finite_prior:
            return _sym3(g + self.prior_frame)
        return np.array([[g[0], g[1]], [g[1], g[2]]])

    def efim(self, g):
        M = self.information(g)
        if M.shape[0] == 2:
            return M
        return M[:2, :2] - np.outer(M[:2, 2], M[:2, 2]) / M[2, 2]

    def trace_hcrb(self, g):
        M = self.information(g)
        try:
            Lc = np.linalg.cholesky(M)
        except np.linalg.LinAlgError:
            return math.inf
        Li = np.linalg.inv(Lc)
        X = (Li.T @ Li)[:2, :2]
        return float(np.trace(self.W @ X))

    def omega_raw(self, omega_frame):
        Pi = np.linalg.inv(self.P)
        return Pi @ omega_frame @ Pi


def make_frame(zeta, Sigma_ref, sigma_s2, sigma_delta):
    coef = 2.0 / sigma_s2
    prior = prior_information(sigma_delta)
    J = fim_entries(zeta, Sigma_ref, sigma_s2)
    A = np.array([[J[0], J[1]], [J[1], J[2]]])
    K = None
    if math.isfinite(prior):
        c = J[5] + prior
        b = J[3:5]
        P = _inv_sqrt(A - np.outer(b, b) / c) if c > 0 else None
        if P is not None:
            T = np.eye(3)
            T[2, :2] = -b / c
            D = np.zeros((3, 3))
            D[:2, :2] = P
            D[2, 2] = 1.0 / math.sqrt(c)
            K = T @ D
    else:
        P = _inv_sqrt(A)
        if P is not None:
            K = np.zeros((3, 3))
            K[:2, :2] = P
            K[2, 2] = 1.0 / math.sqrt(J[5]) if J[5] > 0 else 1.0
    if K is None:
        # reference FIM unusable: fall back to diagonal equilibration
        d = np.array([J[0], J[2], J[5] + (prior if math.isfinite(prior) else 0.0)])
        d = np.where(d > 0, d, 1.0)
        K = np.diag(1.0 / np.sqrt(d))
    L = np.zeros((6, 6))
    for m in range(6):
        e = np.zeros(6)
        e[m] = 1.0
        L[:, m] = _vec6(K.T @ _sym3(e) @ K)
    E33 = np.zeros((3, 3))
    E33[2, 2] = 1.0
    prior_frame = prior * _vec6(K.T @ E33 @ K) if math.isfinite(prior) else np.zeros(6)
    return FimFrame(coef=coef, K=K, L=L, L_inv=np.linalg.inv(L), prior=prior, prior_frame=prior_frame)


# ---------------------------------------------------------------------------
# FP pieces
# ---------------------------------------------------------------------------


@dataclass
class FpState:
    y: complex
    Omega: np.ndarray
    Gamma: np.ndarray
    kappa: float
    beams: link.BeamPair


def fp_update_y(beams, h_c, sigma_n2):
    a = np.vdot(h_c, beams.w_c)
    return complex(np.conj(a) / (abs(np.vdot(h_c, beams.w_0)) ** 2 + sigma_n2))


def fp_surrogate(y, beams, h_c, sigma_n2):
    a = np.vdot(h_c, beams.w_c)
    i0 = abs(np.vdot(h_c, beams.w_0)) ** 2
    return float(2.0 * (y * a).real - abs(y) ** 2 * (i0 + sigma_n2))


def gamma_targets(beams, zeta):
    Z = zeta.stack() if hasattr(zeta, "stack") else np.asarray(zeta)
    wc, w0 = beams.w_c, beams.w_0
    return np.einsum("i,jik,k->j", wc.conj(), Z, wc) + np.einsum("i,jik,k->j", w0.conj(), Z, w0)


def penalty(beams, Gamma, zeta):
    r = gamma_targets(beams, zeta) - np.asarray(Gamma)
    return float(np.sum(np.abs(r) ** 2))


# ---------------------------------------------------------------------------
# Omega / Gamma step
# ---------------------------------------------------------------------------


def project_information(r, frame, Pi, tol=1e-9):
    """Nearest real frame-FIM vector with ``Tr(HCRB) <= Pi``.

    Returns ``(g, Omega_frame, active)``. The SDP point is polished along the
    segment from ``r`` so that the bound holds exactly at the returned point.
    """
    r = np.asarray(r, dtype=float)
    if frame.trace_hcrb(r) <= Pi:
        return r.copy(), frame.efim(r), False
    prob = conic.ConicProblem()
    gi = prob.add_real("g", 6)
    Om = prob.add_symmetric("Omega", 2)
    Z21 = np.zeros((2, 1))
    if frame.finite_prior:
        G = conic.AffineMatrix(_sym3(frame.prior_frame), {int(gi[k]): _sym3(np.eye(6)[k]) for k in range(6)})
        Ob = conic.AffineMatrix.block([[Om.affine(), Z21], [Z21.T, np.zeros((1, 1))]])
    else:
        G = conic.AffineMatrix(np.zeros((2, 2)), {int(gi[k]): _sym3(np.eye(6)[k])[:2, :2] for k in range(3)})
        Ob = Om.affine()
    prob.add_lmi(G - Ob)
    conic.trace_inverse_epigraph(prob, Om.affine(), Pi, weight=frame.W)
    prob.add_quadratic_objective(gi, np.eye(6), r)
    sol = conic.solve(prob, tol=tol)
    if sol.status is conic.Status.INFEASIBLE:
        raise HcrbInfeasible("no information targets satisfy the HCRB bound")
    if sol.status is not conic.Status.OPTIMAL and not np.all(np.isfinite(sol.x)):
        raise ConicError(f"projection SDP failed: {sol.status.value}", solution=sol)
    g = np.asarray(sol.values["g"], dtype=float)
    d = g - r
    s_hi = 1.0
    while frame.trace_hcrb(r + s_hi * d) > Pi:
        s_hi *= 1.5
        if s_hi > 1e6:
            raise ConicError("projection SDP returned an infeasible point", solution=sol)
    s_lo = 0.0
    for _ in range(100):
        s = 0.5 * (s_lo + s_hi)
        if frame.trace_hcrb(r + s * d) > Pi:
            s_lo = s
        else:
            s_hi = s
        if s_hi - s_lo <= 1e-15 * s_hi:
            break
    g = r + s_hi * d
    return g, frame.efim(g), True


def solve_omega_gamma(beams, zeta, sigma_s2, sigma_delta, Pi, kappa, frame=None):
    """Information targets closest to the current beams under the HCRB bound.

    Returns ``(Omega, Gamma)`` in raw units: ``Omega`` is the 2x2 equivalent
    position FIM built from ``Gamma`` and ``Gamma_j`` are target traces. The
    minimiser does not depend on ``kappa``; it is validated and accepted so
    the call mirrors the penalised objective.
    """
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    if not Pi > 0:
        raise ValueError("Pi must be positive")
    if frame is None:
        frame = make_frame(zeta, beams.Sigma, sigma_s2, sigma_delta)
    f_t = frame.to_frame(gamma_targets(beams, zeta))
    if math.isinf(Pi):
        g, Om, _ = f_t.real.copy(), frame.efim(f_t.real), False
    else:
        g, Om, _ = project_information(f_t.real, frame, Pi)
    Gamma_t = g + 1j * f_t.imag
    return frame.omega_raw(Om), frame.from_frame(Gamma_t)


# ---------------------------------------------------------------------------
# beam step
# ---------------------------------------------------------------------------


def _realify_vec(z):
    return np.concatenate([z.real, z.imag])


def _beam_objective(y, beams, Gamma, h_c, zeta_stack, kappa, sigma_n2, sinr_scale):
    F = float(np.sum(np.abs(gamma_targets(beams, zeta_stack) - Gamma) ** 2))
    return -fp_surrogate(y, beams, h_c, sigma_n2) / sinr_scale + F / (2.0 * kappa)


def surrogate_penalty(beams, beams_prev, Gamma, zeta, rho_tr=0.0):
    """``sum_j G_j`` evaluated at ``beams`` with the anchor ``beams_prev``."""
    Z = zeta.stack() if hasattr(zeta, "stack") else np.asarray(zeta)
    w = beams_prev.stacked()
    d = beams.stacked() - w
    n = beams_prev.w_c.size
    f0 = gamma_targets(beams_prev, Z)
    tot = 0.0
    for j in range(Z.shape[0]):
        Zb = np.kron(np.eye(2), Z[j]) if n else Z[j]
        lin = np.vdot(w, Zb @ d) + np.vdot(d, Zb @ w)
        tot += abs(f0[j] + lin - Gamma[j]) ** 2
    return float(tot + Z.shape[0] * rho_tr * np.vdot(d, d).real)


def _beam_qp(y, Gamma, beams_prev, h_c, Z, P_T, kappa, sigma_n2, sinr_scale, rho):
    n = beams_prev.w_c.size
    w = beams_prev.stacked()
    m = 2 * n
    # real coordinates x = [Re w; Im w] with w = [w_c; w_0]
    rows, b0 = [], []
    f0 = gamma_targets(beams_prev, Z)
    for j in range(Z.shape[0]):
        Zb = np.kron(np.eye(2), Z[j])
        p = Zb.conj().T @ w
        q = Zb @ w
        rows.append(np.concatenate([p.real + q.real, p.imag + q.imag]))
        rows.append(np.concatenate([q.imag - p.imag, p.real - q.real]))
        r0 = f0[j] - Gamma[j]
        b0.extend([r0.real, r0.imag])
    A = np.array(rows)
    b0 = np.array(b0)
    x_i = _realify_vec(w)

    hz = np.zeros(m, dtype=complex)
    hz_c = hz.copy()
    hz_c[:n] = h_c
    hz_0 = hz.copy()
    hz_0[n:] = h_c
    # Re(u^H w_c) with u = conj(y) h
    lin = _realify_vec(np.conj(y) * hz_c)
    B = np.vstack([_realify_vec(hz_0), np.concatenate([-hz_0.imag, hz_0.real])])
    J = Z.shape[0]
    H = (abs(y) ** 2 / sinr_scale) * (B.T @ B) + (A.T @ A + J * rho * np.eye(2 * m)) / (2.0 * kappa)
    g = lin / sinr_scale + (A.T @ (A @ x_i - b0) + J * rho * x_i) / (2.0 * kappa)
    x = _trust_region_solve(H, g, P_T)
    z = x[:m] + 1j * x[m:]
    return link.BeamPair(z[:n], z[n:])


def _trust_region_solve(H, g, radius2):
    """argmin x^T H x - 2 g^T x subject to ||x||^2 <= radius2 (H PSD)."""
    ev, V = np.linalg.eigh(0.5 * (H + H.T))
    gt = V.T @ g
    e_min = ev.min()
    if e_min > 1e-14 * max(ev.max(), 1e-300):
        x0 = gt / ev
        if x0 @ x0 <= radius2:
            return V @ x0

    def excess(lam):
        return float(np.sum((gt / (ev + lam)) ** 2) - radius2)

    lam_lo = max(0.0, -e_min) + 1e-14 * max(abs(ev).max(), 1e-300)
    if excess(lam_lo) <= 0:
        x = gt / (ev + lam_lo)
    else:
        lam_hi = lam_lo + np.linalg.norm(g) / math.sqrt(radius2) + 1.0
        while excess(lam_hi) > 0:
            lam_hi *= 2.0
        lam = brentq(excess, lam_lo, lam_hi, xtol=1e-300, rtol=1e-15, maxiter=500)
        x = gt / (ev + lam)
    nx = x @ x
    if nx > radius2:
        x *= math.sqrt(radius2 / nx)
    return V @ x


def default_rho_tr(zeta, P_T):
    Z = zeta.stack() if hasattr(zeta, "stack") else np.asarray(zeta)
    return 1e-3 / P_T * max(np.linalg.norm(Zj, 2) for Zj in Z)


def _beam_step(y, Gamma, beams_prev, h_c, Z, P_T, kappa, sigma_n2, sinr_scale, rho, max_tries=12):
    phi0 = _beam_objective(y, beams_prev, Gamma, h_c, Z, kappa, sigma_n2, sinr_scale)
    for _ in range(max_tries):
        cand = _beam_qp(y, Gamma, beams_prev, h_c, Z, P_T, kappa, sigma_n2, sinr_scale, rho)
        phi = _beam_objective(y, cand, Gamma, h_c, Z, kappa, sigma_n2, sinr_scale)
        if phi <= phi0 + 1e-13 * abs(phi0):
            return cand, rho, phi
        rho *= 10.0
    return beams_prev, rho, phi0


def solve_beams(y, Gamma, beams_prev, h_c, zeta, P_T, kappa, sigma_n2, sinr_scale=1.0, rho_tr=None):
    """One penalised beam update anchored at ``beams_prev``.

    The penalty traces are linearised at the anchor and a proximal term
    ``rho_tr ||w - w_prev||^2`` is added per target, so the step is a convex
    QCQP with a single ball constraint, solved exactly. ``rho_tr`` is raised
    tenfold until the true penalised objective does not increase.
    """
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    Z = zeta.stack() if hasattr(zeta, "stack") else np.asarray(zeta)
    rho = default_rho_tr(Z, P_T) if rho_tr is None else rho_tr
    beams, _, _ = _beam_step(y, np.asarray(Gamma), beams_prev, h_c, Z, P_T, kappa, sigma_n2, sinr_scale, rho)
    return beams


# ---------------------------------------------------------------------------
# outer loop
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PenaltySchedule:
    kappa0: float = 1.0
    iota: float = 0.5
    kappa_min: float = 1e-6
    tol: float = 1e-6
    penalty_rel_tol: float = 1e-5
    inner_max: int = 30
    inner_tol: float = 1e-7
    max_outer: int = 80
    pi_margin: float = 1e-4


@dataclass
class BeamTrace:
    gamma: list = field(default_factory=list)
    trace_hcrb: list = field(default_factory=list)
    residual: list = field(default_factory=list)
    kappa: list = field(default_factory=list)
    exit: str = ""
    state: FpState = None

    def to_dict(self):
        return {
            "gamma": list(self.gamma), "trace_hcrb": list(self.trace_hcrb),
            "residual": list(self.residual), "kappa": list(self.kappa), "exit": self.exit,
        }


def initial_beams(scene, h_c, P_T, rho=0.5):
    a = steering_vector(_tx_angle(scene), scene.N_T, scene.d_a_over_lambda)
    return link.BeamPair(
        math.sqrt(rho * P_T) * h_c / np.linalg.norm(h_c),
        math.sqrt((1.0 - rho) * P_T) * a / np.linalg.norm(a),
    )


def matched_filter_beams(h_c, P_T):
    return link.BeamPair(math.sqrt(P_T) * h_c / np.linalg.norm(h_c), np.zeros_like(h_c))


def _tx_angle(scene):
    from .geometry import angle_between

    return angle_between(scene.p_b, scene.p_o)


def _trace_raw(beams, zeta, scene):
    from .fim import hcrb_for_beams
    from .errors import InconsistentFim, UnobservableTarget

    try:
        return hcrb_for_beams(zeta, beams, scene.sigma_s2, scene.sigma_delta).trace_hcrb
    except (UnobservableTarget, InconsistentFim):
        return math.inf


def sensing_bound(zeta, scene, P_T, frame=None):
    """Smallest Tr(HCRB) over all covariances with ``Tr(Sigma) <= P_T``.

    A convex relaxation of the two-beam problem, hence a lower bound on what
    any beam pair can reach; returns ``(bound, Sigma)``.
    """
    n = scene.N_T
    if frame is None:
        frame = make_frame(zeta, (P_T / n) * np.eye(n), scene.sigma_s2, scene.sigma_delta)
    Zt = frame.zeta(zeta)
    prob = conic.ConicProblem()
    # Hermitian Sigma: real diagonal, complex strict upper triangle
    basis = []
    for i in range(n):
        E = np.zeros((n, n), dtype=complex)
        E[i, i] = 1.0
        basis.append(E)
    for i in range(n):
        for j in range(i + 1, n):
            E = np.zeros((n, n), dtype=complex)
            E[i, j] = E[j, i] = 1.0
            basis.append(E)
            E = np.zeros((n, n), dtype=complex)
            E[i, j], E[j, i] = 1j, -1j
            basis.append(E)
    si = prob.add_real("sigma", len(basis))
    prob.add_lmi(conic.realify_lmi({"const": np.zeros((n, n)), "terms": {int(k): B for k, B in zip(si, basis)}}))
    prob.add_ineq({int(si[i]): 1.0 for i in range(n)}, P_T)
    # g_k = Re Tr(zeta_k Sigma) is linear in the Hermitian coordinates
    coeff = np.array([[np.trace(Zt[k] @ B).real for B in basis] for k in range(6)])
    Om = prob.add_symmetric("Omega", 2)
    if frame.finite_prior:
        terms = {}
        for idx, col in zip(si, coeff.T):
            terms[int(idx)] = _sym3(col)
        G = conic.AffineMatrix(_sym3(frame.prior_frame), terms)
        Z21 = np.zeros((2, 1))
        Ob = conic.AffineMatrix.block([[Om.affine(), Z21], [Z21.T, np.zeros((1, 1))]])
    else:
        terms = {int(idx): _sym3(col)[:2, :2] for idx, col in zip(si, coeff.T)}
        G = conic.AffineMatrix(np.zeros((2, 2)), terms)
        Ob = Om.affine()
    prob.add_lmi(G - Ob)
    U = prob.add_symmetric("U", 2)
    prob.add_lmi(conic.AffineMatrix.block([[U.affine(), np.eye(2)], [np.eye(2), Om.affine()]]))
    W = frame.W
    prob.add_linear_objective({int(U.index[0]): W[0, 0], int(U.index[1]): 2 * W[0, 1], int(U.index[2]): W[1, 1]})
    sol = conic.solve(prob, tol=1e-9)
    x = sol.values["sigma"]
    Sigma = sum(v * B for v, B in zip(x, basis))
    return float(sol.objective), Sigma


def beam_outer(R_c, scene, zeta, h_c, Pi, P_T, schedule=None, beams0=None):
    """Penalised alternating optimisation of the beam pair.

    Returns ``(BeamPair, BeamTrace)``. The final pair meets the power budget
    and ``Tr(HCRB) <= Pi (1 + 1e-6)``.
    """
    sch = PenaltySchedule() if schedule is None else schedule
    trace = BeamTrace()
    sinr_scale = P_T * float(np.vdot(h_c, h_c).real) / scene.sigma_n2
    mf = matched_filter_beams(h_c, P_T)
    tr_mf = _trace_raw(mf, zeta, scene)
    if tr_mf <= Pi:
        # SINR maximiser already meets the sensing bound
        gam = link.sinr(mf, h_c, scene.sigma_n2)
        trace.gamma.append(gam)
        trace.trace_hcrb.append(tr_mf)
        trace.residual.append(0.0)
        trace.kappa.append(math.inf)
        trace.exit = "matched_filter"
        _check_rate(R_c, gam, trace)
        return mf, trace

    frame = make_frame(zeta, (P_T / scene.N_T) * np.eye(scene.N_T), scene.sigma_s2, scene.sigma_delta)
    bound, _ = sensing_bound(zeta, scene, P_T, frame)
    if bound > Pi * (1 + 1e-6):
        raise HcrbInfeasible(f"lowest reachable Tr(HCRB) {bound:.6g} exceeds threshold {Pi:.6g}")
    # Hermitian parts: the FIM only sees Re Tr(zeta Sigma), so targets stay real
    Zt = frame.zeta(zeta)
    Zt = 0.5 * (Zt + np.conj(np.swapaxes(Zt, 1, 2)))
    Pi_in = Pi * (1.0 - sch.pi_margin)
    beams = initial_beams(scene, h_c, P_T) if beams0 is None else beams0
    rho = default_rho_tr(Zt, P_T)
    rho_base = rho
    kappa = sch.kappa0
    best = None
    gam_prev = None
    for _ in range(sch.max_outer):
        phi_prev = None
        for _ in range(sch.inner_max):
            y = fp_update_y(beams, h_c, scene.sigma_n2)
            f_t = gamma_targets(beams, Zt)
            g, _, _ = project_information(f_t.real, frame, Pi_in)
            Gamma_t = g + 1j * f_t.imag
            beams, rho, phi = _beam_step(y, Gamma_t, beams, h_c, Zt, P_T, kappa, scene.sigma_n2, sinr_scale, rho)
            rho = max(rho / 10.0, rho_base)
            if phi_prev is not None and abs(phi_prev - phi) <= sch.inner_tol * max(abs(phi), 1e-300):
                break
            phi_prev = phi
        f_t = gamma_targets(beams, Zt)
        g, Om, _ = project_information(f_t.real, frame, Pi_in)
        Gamma_t = g + 1j * f_t.imag
        resid = float(np.max(np.abs(f_t - Gamma_t)))
        f_t = f_t.real
        gam = link.sinr(beams, h_c, scene.sigma_n2)
        tr = _trace_raw(beams, zeta, scene)
        trace.gamma.append(gam)
        trace.trace_hcrb.append(tr)
        trace.residual.append(resid)
        trace.kappa.append(kappa)
        trace.state = FpState(y=fp_update_y(beams, h_c, scene.sigma_n2), Omega=frame.omega_raw(Om),
                              Gamma=frame.from_frame(Gamma_t), kappa=kappa, beams=beams)
        feasible = tr <= Pi * (1 + 1e-6)
        if feasible and (best is None or gam > best[1]):
            best = (beams, gam)
        small = resid <= sch.penalty_rel_tol * float(np.max(np.abs(Gamma_t)))
        steady = gam_prev is not None and abs(gam - gam_prev) <= sch.tol * gam
        gam_prev = gam
        if feasible and small and (steady or kappa <= sch.kappa_min):
            break
        if not small:
            kappa = max(sch.iota * kappa, sch.kappa_min)
    else:
        trace.exit = "max_iter"
        if best is None:
            raise MaxIter("beam penalty loop did not reach a feasible point", best=(beams, trace))
        beams = best[0]
    beams = _polish_toward(beams, mf, zeta, scene, Pi, h_c)
    gam = link.sinr(beams, h_c, scene.sigma_n2)
    trace.gamma.append(gam)
    trace.trace_hcrb.append(_trace_raw(beams, zeta, scene))
    trace.residual.append(0.0)
    trace.kappa.append(kappa)
    if not trace.exit:
        trace.exit = "converged"
    _check_rate(R_c, gam, trace)
    return beams, trace


def _polish_toward(beams, target, zeta, scene, Pi, h_c):
    """Slide along the power-normalised segment toward ``target`` up to the bound."""
    P = beams.power

    def at(t):
        w = (1.0 - t) * beams.stacked() + t * target.stacked()
        nw = np.linalg.norm(w)
        w = w * (math.sqrt(P) / nw) if nw > 0 else w
        return link.BeamPair.from_stacked(w)

    if _trace_raw(beams, zeta, scene) > Pi:
        return beams
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if _trace_raw(at(mid), zeta, scene) <= Pi:
            lo = mid
        else:
            hi = mid
    out = at(lo)
    if link.sinr(out, h_c, scene.sigma_n2) < link.sinr(beams, h_c, scene.sigma_n2):
        return beams
    return out


def _check_rate(R_c, gamma, trace):
    if R_c is not None and link.capacity(gamma) < R_c:
        trace.exit += ";rate_warning"
