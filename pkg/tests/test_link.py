import math

import mpmath as mp
import numpy as np
import pytest

from issc import link
from issc.link import BeamPair, RatePoint, ber, capacity, hazard, log_q_function, q_function, sinr

mp.mp.dps = 50


def mp_q(x):
    return mp.erfc(mp.mpf(x) / mp.sqrt(2)) / 2


def test_sinr_examples(h_c):
    n2 = 1e-8
    z = np.zeros(4, dtype=complex)
    assert sinr(BeamPair(z, h_c), h_c, n2) == 0.0
    P = 0.3
    mf = BeamPair(math.sqrt(P) * h_c / np.linalg.norm(h_c), z)
    assert sinr(mf, h_c, n2) == pytest.approx(P * np.vdot(h_c, h_c).real / n2, rel=1e-13)
    rng = np.random.default_rng(0)
    v = rng.normal(size=4) + 1j * rng.normal(size=4)
    w0 = v - h_c * np.vdot(h_c, v) / np.vdot(h_c, h_c)
    b = BeamPair(mf.w_c, w0)
    assert abs(np.vdot(h_c, w0)) ** 2 <= 1e-30 * np.linalg.norm(w0) ** 2 * 1e6
    assert sinr(b, h_c, n2) == pytest.approx(sinr(mf, h_c, n2), rel=1e-12)


def test_sinr_phase_invariance(h_c):
    rng = np.random.default_rng(1)
    b = BeamPair(rng.normal(size=4) + 1j * rng.normal(size=4), rng.normal(size=4) + 1j * rng.normal(size=4))
    rot = np.exp(1j * 0.77)
    assert sinr(BeamPair(rot * b.w_c, rot * b.w_0), h_c, 1e-8) == pytest.approx(sinr(b, h_c, 1e-8), rel=1e-13)


def test_capacity_examples():
    assert capacity(0.0) == 0.0
    assert capacity(1.0) == 1.0
    assert capacity(3.0) == 2.0


def test_q_and_hazard():
    assert q_function(0.0) == 0.5
    assert q_function(-1.3) == pytest.approx(1 - q_function(1.3), abs=1e-15)
    # high-precision oracle: hazard(8) = phi(8)/Q(8)
    h8 = mp.npdf(8) / mp_q(8)
    assert hazard(8.0) == pytest.approx(float(h8), rel=1e-12)
    assert hazard(8.0) == pytest.approx(8.121, abs=5e-4)


@pytest.mark.parametrize("x", [-6.0, -1.0, 0.0, 0.5, 3.0, 8.0, 20.0, 37.5])
def test_q_against_mpmath(x):
    assert q_function(x) == pytest.approx(float(mp_q(x)), rel=1e-13)
    assert log_q_function(x) == pytest.approx(float(mp.log(mp_q(x))), rel=1e-13, abs=1e-15)


def test_log_q_does_not_underflow():
    assert np.isfinite(log_q_function(60.0))
    assert log_q_function(60.0) == pytest.approx(float(mp.log(mp_q(60))), rel=1e-13)


def test_hazard_exceeds_x():
    x = np.linspace(0.01, 40, 400)
    assert np.all(hazard(x) > x)


def test_ber_anchor_capacity_equals_rate():
    assert ber(1.0, 1.0, 256) == 1.953125e-3
    assert ber(1.0, 1.0, 256, exact_dispersion=False) == 1.953125e-3


def test_ber_saturates_to_floor():
    assert ber(1e12, 1.0, 256) == link.BER_FLOOR


def test_ber_reference_point_unit_dispersion():
    # Q(16 ln 2) / 256, with the tail from an arbitrary-precision erfc
    ref = mp_q(16 * mp.log(2)) / 256
    assert ber(3.0, 1.0, 256, exact_dispersion=False) == pytest.approx(float(ref), rel=1e-12)


def test_ber_exact_dispersion_matches_mpmath():
    g, R, L = 3.0, 1.5, 256
    V = mp.sqrt(1 - 1 / mp.mpf(1 + g) ** 2)
    ref = mp_q(mp.log(2) * mp.sqrt(L) * (mp.log(1 + g, 2) - R) / V) / (R * L)
    assert ber(g, R, L) == pytest.approx(float(ref), rel=1e-12)


def test_ber_is_clamped_to_half():
    assert ber(1e-6, 0.001, 1) <= 0.5


def test_ber_monotone_on_unclamped_region():
    rng = np.random.default_rng(4)
    for _ in range(1000):
        g = 10 ** rng.uniform(-1, 2)
        C = float(capacity(g))
        R = rng.uniform(0.2, 1.0) * C + 0.05
        b = link.log10_ber_raw(g, R, 256)
        if not (-30 < b < math.log10(0.5)):
            continue
        assert link.log10_ber_raw(g * 1.001, R, 256) <= b
        assert link.log10_ber_raw(g, R * 1.001, 256) >= b


def test_beam_pair_accounting():
    b = BeamPair([1, 1j], [0, 2])
    assert b.power == 6.0 and b.power_comm == 2.0 and b.power_sense == 4.0
    assert np.allclose(b.Sigma, np.outer(b.w_c, b.w_c.conj()) + np.outer(b.w_0, b.w_0.conj()))
    assert np.array_equal(BeamPair.from_stacked(b.stacked()).w_0, b.w_0)
    with pytest.raises(ValueError):
        BeamPair([1, 2], [1])


def test_rate_point():
    rp = RatePoint(R_s=6.0, R_c=8.0, L=256, E_a_max=1.0)
    assert rp.E_a == 0.75 and rp.N_c == 2048 and rp.feasible
    assert not RatePoint(R_s=6.0, R_c=5.0, L=256, E_a_max=1.0).feasible
