"""Property-based checks of the invariants each module promises."""

import math

import numpy as np
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from issc import driver, link
from issc.beam_fp import fp_surrogate, fp_update_y, gamma_targets
from issc.conic import realify_lmi
from issc.distortion import LogisticDistortionModel, e2e_log10_distortion
from issc.fim import FimBlocks, fim_entries, hcrb
from issc.geometry import steering_vector
from issc.link import BeamPair
from issc.rate_sca import RateIterate, distortion_constraint, log10_ber_unit_dispersion, u1_linearized, u2_linearized

finite = st.floats(-1e3, 1e3, allow_nan=False)
cvec = st.builds(lambda a, b: a + 1j * b, arrays(float, 4, elements=finite), arrays(float, 4, elements=finite))


@given(st.floats(-30, 30))
def test_q_symmetry(x):
    assert abs(link.q_function(x) + link.q_function(-x) - 1.0) <= 1e-15


@given(st.floats(1e-3, 35))
def test_hazard_above_argument(x):
    assert link.hazard(x) > x


@given(st.floats(-math.pi / 2, 3 * math.pi / 2), st.integers(1, 16))
def test_steering_unit_modulus(theta, n):
    a = steering_vector(theta, n)
    assert a[0] == 1 and np.max(np.abs(np.abs(a) - 1)) <= 1e-12


@given(st.floats(1e-3, 1e6), st.floats(1e-3, 20), st.integers(1, 4096))
def test_ber_in_range(gamma, R_c, L):
    b = link.ber(gamma, R_c, L)
    assert link.BER_FLOOR <= b <= link.BER_CEIL


@given(st.floats(-5, 0), st.floats(0, 3), st.floats(0.1, 5), st.floats(-10, -1))
def test_distortion_monotone_bounded(Ds, Dc, E1, E2):
    m = LogisticDistortionModel(3.0, Ds, Dc, E1, E2)
    lg = e2e_log10_distortion(m, np.logspace(-12, math.log10(0.5), 50))
    assert np.all(np.diff(lg) >= -1e-15)
    assert np.all(lg >= Ds - 1e-12) and np.all(lg <= Ds + Dc + 1e-12)


@settings(max_examples=50)
@given(cvec, cvec, cvec)
def test_quadratic_transform_exact(h, wc, w0):
    if np.linalg.norm(h) == 0 or abs(np.vdot(h, wc)) < 1e-6:
        return
    b = BeamPair(wc, w0)
    g = link.sinr(b, h, 1.0)
    assert abs(fp_surrogate(fp_update_y(b, h, 1.0), b, h, 1.0) - g) <= 1e-12 * g


@settings(max_examples=50)
@given(cvec, cvec, st.integers(0, 2**31))
def test_fim_linear_in_covariance(wc, w0, seed):
    rng = np.random.default_rng(seed)
    Z = rng.normal(size=(6, 4, 4)) + 1j * rng.normal(size=(6, 4, 4))
    b = BeamPair(wc, w0)
    S1 = np.outer(wc, wc.conj())
    S2 = np.outer(w0, w0.conj())
    lhs = fim_entries(Z, S1 + S2, 1.0)
    rhs = fim_entries(Z, S1, 1.0) + fim_entries(Z, S2, 1.0)
    scale = max(1.0, np.max(np.abs(lhs)))
    assert np.max(np.abs(lhs - rhs)) <= 1e-9 * scale
    assert np.allclose(gamma_targets(b, Z).real * 2, lhs, rtol=1e-9, atol=1e-9 * scale)


@settings(max_examples=200)
@given(st.integers(0, 2**31), st.floats(0.0, 10.0))
def test_hcrb_dominates_crb(seed, prior):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(3, 3))
    J = X @ X.T + 0.05 * np.eye(3)
    r = hcrb(FimBlocks(J[:2, :2], J[:2, 2], J[2, 2], prior))
    assert r.trace_hcrb >= r.trace_crb
    ev = np.linalg.eigvalsh(r.penalty_matrix)
    assert ev.min() >= -1e-10 * max(1.0, np.abs(ev).max())


@settings(max_examples=100)
@given(st.integers(0, 2**31), st.floats(-3, 3))
def test_realify_preserves_spectrum(seed, shift):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    M = X + X.conj().T + shift * np.eye(3)
    ev = np.linalg.eigvalsh(M)
    er = np.linalg.eigvalsh(realify_lmi(M))
    assert np.allclose(np.sort(np.repeat(ev, 2)), er, atol=1e-10)


@given(arrays(float, st.integers(1, 6), elements=st.floats(1e-3, 1e3)), st.floats(1e-3, 1e3))
def test_water_filling_budget(gains, P):
    p = driver.water_filling(gains, P)
    assert np.all(p >= 0)
    assert abs(p.sum() - P) <= 1e-9 * P
    # equal water level on active channels
    lv = (p + 1.0 / gains)[p > 0]
    assert np.ptp(lv) <= 1e-9 * max(1.0, lv.max())


@given(st.floats(1.0, 3.0), st.floats(0.05, 1.0), st.floats(0.05, 1.0))
def test_u1_majorizes(lg, frac_anchor, frac):
    gamma = 10**lg
    C = float(link.capacity(gamma))
    a = RateIterate(frac_anchor * C, 0.0, -5.0, 0.0, 0.0)
    R = frac * C
    assert u1_linearized(R, a, gamma, 256) >= log10_ber_unit_dispersion(R, gamma, 256) - 1e-12


@given(st.floats(-3, 1), st.floats(-12, -1), st.floats(-3, 1), st.floats(-12, -1), st.floats(0, 4))
def test_u2_majorizes(nu_a, rho_a, nu, rho, E1):
    m = LogisticDistortionModel(3.0, -2.0, 1.3, E1, -5.0)
    a = RateIterate(1.0, nu_a, rho_a, E1 * (rho_a + 5.0), 0.0)
    lhs = u2_linearized(nu, rho, a, m)
    rhs = distortion_constraint(nu, rho, m)
    assert lhs >= rhs - 1e-9 * max(1.0, abs(rhs))


@given(st.floats(-60, 60))
def test_dbm_round_trip(dbm):
    assert abs(driver.watt_to_dbm(driver.parse_quantity(f"{dbm!r} dBm")) - dbm) <= 1e-9
