"""
Numerical self-check suites: finite differences on the geometry, block
inversion of the hybrid FIM, quadratic-transform exactness, the rate grid
oracle and the anchor consistency of every first-order model.
"""

import math

import numpy as np

from . import beam_fp, fim, geometry, link, rate_sca
from .driver import CheckResult, _setup


def _rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


def check_derivatives(scene, h=1e-4):
    sense = geometry.build_sense_channel(scene)
    err = 0.0
    for k, (dH, dt) in enumerate([(sense.dH_dx, sense.dtau_dx), (sense.dH_dy, sense.dtau_dy)]):
        e = np.zeros(2)
        e[k] = h
        sp = geometry.build_sense_channel(scene.replace(p_o=scene.p_o + e))
        sm = geometry.build_sense_channel(scene.replace(p_o=scene.p_o - e))
        err = max(err, _rel(dH, (sp.H0 - sm.H0) / (2 * h)), _rel(dt, (sp.tau - sm.tau) / (2 * h)))
    return CheckResult("derivatives_fd", err <= 1e-6, err, 1e-6, "central differences on target position")


def check_block_inversion(scene, zeta):
    Sigma = np.eye(scene.N_T) / scene.N_T
    blocks = fim.fim_assemble(zeta, Sigma, scene.sigma_s2, scene.sigma_delta)
    if math.isinf(blocks.J_B_c3):
        rep = fim.hcrb(blocks)
        err = _rel(rep.hcrb_matrix, np.linalg.inv(blocks.J_c1))
        return CheckResult("hcrb_block_inversion", err <= 1e-10, err, 1e-10, "perfect sync: HCRB = CRB")
    rep = fim.hcrb(blocks)
    err = _rel(rep.hcrb_matrix, np.linalg.inv(blocks.full())[:2, :2])
    return CheckResult("hcrb_block_inversion", err <= 1e-9, err, 1e-9, "against the 3x3 inverse")


def check_perfect_sync(scene, zeta):
    Sigma = np.eye(scene.N_T) / scene.N_T
    rep = fim.hcrb(fim.fim_assemble(zeta, Sigma, scene.sigma_s2, 0.0))
    err = abs(rep.trace_hcrb - rep.trace_crb) / rep.trace_crb
    return CheckResult("hcrb_equals_crb_without_offset", err <= 1e-12, err, 1e-12,
                       "active" if scene.sigma_delta == 0 else "evaluated at sigma_delta = 0")


def check_single_tone(scene, zeta):
    if scene.N != 1:
        return CheckResult("single_tone_zeta", True, 0.0, 0.0, "inactive (N > 1)")
    err = max(float(np.max(np.abs(zeta[j]))) for j in (4, 5, 6))
    return CheckResult("single_tone_zeta", err == 0.0, err, 0.0, "zeta_4..6 vanish on a one-tone grid")


def check_quadratic_transform(scene, h_c, rng, draws=200):
    err = 0.0
    n = scene.N_T
    for _ in range(draws):
        b = link.BeamPair(rng.normal(size=n) + 1j * rng.normal(size=n), rng.normal(size=n) + 1j * rng.normal(size=n))
        y = beam_fp.fp_update_y(b, h_c, scene.sigma_n2)
        g = link.sinr(b, h_c, scene.sigma_n2)
        err = max(err, abs(beam_fp.fp_surrogate(y, b, h_c, scene.sigma_n2) - g) / g)
    return CheckResult("quadratic_transform", err <= 1e-12, err, 1e-12, f"{draws} random beam pairs")


def check_rate_grid(config, bank, gamma):
    err = 0.0
    done = 0
    for model in bank:
        try:
            it, _ = rate_sca.solve_rate(model, gamma, config.L, config.E_a_max)
        except rate_sca.RateInfeasible:
            continue
        R = np.linspace(model.R_s / config.E_a_max, float(link.capacity(gamma)), 10_000)
        D = np.min(model(link.ber(gamma, R, config.L, exact_dispersion=False)))
        err = max(err, abs(it.objective - D) / D)
        done += 1
    return CheckResult("rate_grid_oracle", bool(err <= 1e-3), float(err), 1e-3, f"{done} feasible models")


def check_anchors(config, bank, scene, h_c, zeta, gamma, rng):
    model = bank.largest()
    err = 0.0
    R_lo = min(model.R_s / config.E_a_max, float(link.capacity(gamma)))
    R_i = 0.5 * (R_lo + float(link.capacity(gamma)))
    anchor = rate_sca.RateIterate(R_i, -0.3, -7.0, model.E1 * (-7.0 - model.E2), 0.0)
    u = rate_sca.log10_ber_unit_dispersion(R_i, gamma, config.L)
    err = max(err, abs(rate_sca.u1_linearized(R_i, anchor, gamma, config.L) - u) / max(abs(u), 1.0))
    c = rate_sca.distortion_constraint(anchor.nu, anchor.rho_hat, model)
    err = max(err, abs(rate_sca.u2_linearized(anchor.nu, anchor.rho_hat, anchor, model) - c) / max(abs(c), 1.0))
    n = scene.N_T
    b0 = link.BeamPair(rng.normal(size=n) + 1j * rng.normal(size=n), rng.normal(size=n) + 1j * rng.normal(size=n))
    G = rng.normal(size=6) + 1j * rng.normal(size=6)
    Z = zeta.stack() / np.max(np.abs(zeta.stack()))
    F = beam_fp.penalty(b0, G, Z)
    err = max(err, abs(beam_fp.surrogate_penalty(b0, b0, G, Z) - F) / F)
    return CheckResult("majorizer_anchor", err <= 1e-10, err, 1e-10, "U1, U2 and beam surrogate at their anchors")


def run_all(config):
    rng = np.random.default_rng(config.seed)
    pb = _setup(config)
    bank = config.load_bank()
    mf = beam_fp.matched_filter_beams(pb.h_c, config.P_T)
    gamma = link.sinr(mf, pb.h_c, pb.scene.sigma_n2)
    return [
        check_derivatives(pb.scene),
        check_block_inversion(pb.scene, pb.zeta),
        check_perfect_sync(pb.scene, pb.zeta),
        check_single_tone(pb.scene, pb.zeta),
        check_quadratic_transform(pb.scene, pb.h_c, rng),
        check_rate_grid(config, bank, gamma),
        check_anchors(config, bank, pb.scene, pb.h_c, pb.zeta, gamma, rng),
    ]
