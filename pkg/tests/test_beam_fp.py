import math

import numpy as np
import pytest

from issc import beam_fp, link
from issc.beam_fp import (
    PenaltySchedule, beam_outer, fp_surrogate, fp_update_y, gamma_targets, matched_filter_beams, penalty,
    solve_beams, solve_omega_gamma, surrogate_penalty,
)
from issc.errors import HcrbInfeasible
from issc.fim import build_zeta, hcrb_for_beams, trace_hcrb_from_entries
from issc.geometry import build_sense_channel
from issc.link import BeamPair

from conftest import random_beams

P_LOW = 0.1  # 20 dBm, where the sensing bound is active at the default threshold
PI_DEFAULT = 2.0976e-7


def _trace(beams, zeta, scene):
    return hcrb_for_beams(zeta, beams, scene.sigma_s2, scene.sigma_delta).trace_hcrb


def test_y_zero_comm_beam(h_c):
    b = BeamPair(np.zeros(4), np.ones(4))
    y = fp_update_y(b, h_c, 1e-8)
    assert y == 0 and fp_surrogate(y, b, h_c, 1e-8) == 0


def test_y_exact_without_interference(h_c):
    b = BeamPair(h_c * 3.0, np.zeros(4))
    y = fp_update_y(b, h_c, 1e-8)
    assert fp_surrogate(y, b, h_c, 1e-8) == pytest.approx(abs(np.vdot(h_c, b.w_c)) ** 2 / 1e-8, rel=1e-13)


def test_quadratic_transform_random(h_c):
    rng = np.random.default_rng(40)
    for _ in range(1000):
        b = random_beams(rng, 4, scale=rng.uniform(1e-3, 1))
        y = fp_update_y(b, h_c, 1e-8)
        g = link.sinr(b, h_c, 1e-8)
        assert abs(fp_surrogate(y, b, h_c, 1e-8) - g) <= 1e-12 * g


def test_gamma_targets_identities(zeta):
    rng = np.random.default_rng(41)
    z0 = BeamPair(np.zeros(4), np.zeros(4))
    assert np.all(gamma_targets(z0, zeta) == 0)
    b = random_beams(rng, 4)
    I6 = np.stack([np.eye(4)] * 6)
    assert np.allclose(gamma_targets(b, I6), b.power, rtol=1e-14)
    via_sigma = np.array([np.trace(Z @ b.Sigma) for Z in zeta.zeta])
    got = gamma_targets(b, zeta)
    assert np.max(np.abs(got - via_sigma)) <= 1e-12 * np.max(np.abs(via_sigma))


def test_omega_gamma_feasible_beams_untouched(scene, zeta, h_c):
    mf = matched_filter_beams(h_c, 1.0)
    Pi = 2 * _trace(mf, zeta, scene)
    Om, G = solve_omega_gamma(mf, zeta, scene.sigma_s2, scene.sigma_delta, Pi, 1.0)
    f = gamma_targets(mf, zeta)
    assert np.allclose(G, f, rtol=1e-12, atol=1e-12 * np.abs(f).max())
    Om2, G2 = solve_omega_gamma(mf, zeta, scene.sigma_s2, scene.sigma_delta, math.inf, 1.0)
    assert np.allclose(G2, f, rtol=1e-12, atol=1e-12 * np.abs(f).max())


def test_omega_gamma_projects_onto_bound(scene, zeta, h_c):
    mf = matched_filter_beams(h_c, P_LOW)
    tr = _trace(mf, zeta, scene)
    Pi = 0.7 * tr
    Om, G = solve_omega_gamma(mf, zeta, scene.sigma_s2, scene.sigma_delta, Pi, 1.0)
    f = gamma_targets(mf, zeta)
    assert np.max(np.abs(G - f) / np.abs(f)) > 1e-6
    J = (2.0 / scene.sigma_s2) * np.real(G)
    assert trace_hcrb_from_entries(J, 1.0 / scene.sigma_delta**2) <= Pi * (1 + 1e-6)
    assert np.trace(np.linalg.inv(Om)) <= Pi * (1 + 1e-6)


def test_omega_gamma_rejects_bad_args(scene, zeta, h_c):
    mf = matched_filter_beams(h_c, 1.0)
    with pytest.raises(ValueError):
        solve_omega_gamma(mf, zeta, scene.sigma_s2, scene.sigma_delta, 1e-7, 0.0)
    with pytest.raises(ValueError):
        solve_omega_gamma(mf, zeta, scene.sigma_s2, scene.sigma_delta, 0.0, 1.0)


def _unit_zeta(zeta):
    Z = zeta.stack()
    return Z / np.max(np.abs(Z))


def test_surrogate_anchor_consistency(zeta):
    rng = np.random.default_rng(42)
    Z = _unit_zeta(zeta)
    for _ in range(50):
        b = random_beams(rng, 4)
        G = rng.normal(size=6) + 1j * rng.normal(size=6)
        F = penalty(b, G, Z)
        assert abs(surrogate_penalty(b, b, G, Z) - F) <= 1e-10 * F


def test_surrogate_zero_at_consistent_targets(zeta):
    rng = np.random.default_rng(43)
    Z = _unit_zeta(zeta)
    b = random_beams(rng, 4)
    assert surrogate_penalty(b, b, gamma_targets(b, Z), Z) <= 1e-24


def test_beam_step_without_penalty_is_matched_filter(h_c, zeta):
    rng = np.random.default_rng(44)
    b0 = random_beams(rng, 4, scale=0.1)
    y = fp_update_y(b0, h_c, 1e-8)
    b = solve_beams(y, np.zeros(6), b0, h_c, _unit_zeta(zeta), 1.0, 1e30, 1e-8)
    mf = matched_filter_beams(h_c, 1.0)
    assert abs(np.vdot(mf.w_c, b.w_c)) == pytest.approx(1.0, rel=1e-6)
    assert b.power_sense <= 1e-6
    assert b.power <= 1.0 * (1 + 1e-12)


def test_beam_step_descends(h_c, zeta):
    rng = np.random.default_rng(45)
    Z = _unit_zeta(zeta)
    scale = float(np.vdot(h_c, h_c).real) / 1e-8
    for _ in range(10):
        b0 = random_beams(rng, 4)
        b0 = BeamPair(b0.w_c / math.sqrt(b0.power), b0.w_0 / math.sqrt(b0.power))
        G = gamma_targets(b0, Z) * rng.uniform(0.5, 1.5, size=6)
        y = fp_update_y(b0, h_c, 1e-8)
        b = solve_beams(y, G, b0, h_c, Z, 1.0, 1.0, 1e-8, sinr_scale=scale)
        before = beam_fp._beam_objective(y, b0, G, h_c, Z, 1.0, 1e-8, scale)
        after = beam_fp._beam_objective(y, b, G, h_c, Z, 1.0, 1e-8, scale)
        assert after <= before + 1e-12 * abs(before)
        assert b.power <= 1.0 * (1 + 1e-12)


def test_outer_unbounded_gives_matched_filter(scene, zeta, h_c):
    b, tr = beam_outer(1.0, scene, zeta, h_c, math.inf, P_LOW)
    mf = matched_filter_beams(h_c, P_LOW)
    assert link.sinr(b, h_c, scene.sigma_n2) >= link.sinr(mf, h_c, scene.sigma_n2) * (1 - 1e-6)
    assert b.power_sense == 0.0 and tr.exit == "matched_filter"


def test_outer_infeasible_threshold(scene, zeta, h_c):
    bound, _ = beam_fp.sensing_bound(zeta, scene, P_LOW)
    with pytest.raises(HcrbInfeasible):
        beam_outer(1.0, scene, zeta, h_c, 0.5 * bound, P_LOW)


@pytest.fixture(scope="module")
def pi_sweep(scene, zeta, h_c):
    out = []
    for Pi in (1.2e-7, 1.5e-7, PI_DEFAULT, 2.5e-7, 3.0e-7):
        b, tr = beam_outer(1.0, scene, zeta, h_c, Pi, P_LOW)
        out.append((Pi, b, tr))
    return out


def test_outer_feasible_at_exit(pi_sweep, scene, zeta):
    for Pi, b, tr in pi_sweep:
        assert _trace(b, zeta, scene) <= Pi * (1 + 1e-6)
        assert b.power <= P_LOW * (1 + 1e-12)
        assert tr.exit.startswith("converged")


def test_tighter_threshold_lowers_sinr(pi_sweep, h_c, scene):
    g = [link.sinr(b, h_c, scene.sigma_n2) for _, b, _ in pi_sweep]
    assert all(b > a for a, b in zip(g, g[1:]))


def test_outer_trace_serializes(pi_sweep):
    d = pi_sweep[2][2].to_dict()
    assert set(d) == {"gamma", "trace_hcrb", "residual", "kappa", "exit"}
    assert len(d["gamma"]) == len(d["kappa"]) >= 1


def test_sync_error_costs_sinr(pi_sweep, scene, h_c):
    sc0 = scene.replace(sigma_delta=0.0)
    z0 = build_zeta(build_sense_channel(sc0), sc0)
    b0, _ = beam_outer(1.0, sc0, z0, h_c, PI_DEFAULT, P_LOW)
    b100 = pi_sweep[2][1]
    assert link.sinr(b100, h_c, scene.sigma_n2) <= link.sinr(b0, h_c, scene.sigma_n2)
    assert b100.power_sense >= b0.power_sense


def test_schedule_defaults():
    s = PenaltySchedule()
    assert (s.kappa0, s.iota, s.kappa_min) == (1.0, 0.5, 1e-6)
