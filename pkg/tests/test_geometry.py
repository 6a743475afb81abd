import math

import numpy as np
import pytest

from issc import geometry
from issc.errors import DegenerateGeometry
from issc.geometry import Scene, angle_between, build_comm_channel, build_sense_channel, path_loss, steering_vector

from conftest import random_scene


def test_angle_positive_axis():
    assert angle_between((0, 0), (1, 0)) == 0.0


def test_angle_negative_axis_adds_pi():
    assert angle_between((0, 0), (-1, 0)) == pytest.approx(math.pi, abs=1e-15)


def test_angle_to_reference_target():
    assert angle_between((0, 0), (100, 50)) == pytest.approx(math.atan(0.5), abs=1e-15)
    assert angle_between((0, 0), (100, 50)) == pytest.approx(0.46365, abs=1e-5)


def test_angle_branch_matches_indicator_form():
    rng = np.random.default_rng(1)
    for _ in range(200):
        a, b = rng.normal(size=2), rng.normal(size=2)
        d = b - a
        ref = math.atan(d[1] / d[0]) + (math.pi if d[0] < 0 else 0.0)
        got = angle_between(a, b)
        assert got == pytest.approx(ref, abs=1e-12)
        assert -math.pi / 2 <= got < 3 * math.pi / 2


def test_angle_coincident_raises():
    with pytest.raises(DegenerateGeometry):
        angle_between((1, 2), (1, 2))


def test_reversed_direction_same_array_response_magnitude():
    a = angle_between((0, 0), (3, 4))
    b = angle_between((3, 4), (0, 0))
    assert np.allclose(np.abs(steering_vector(a, 4)), np.abs(steering_vector(b, 4)))


def test_steering_examples():
    assert np.array_equal(steering_vector(0.0, 4), np.ones(4, dtype=complex))
    assert np.array_equal(steering_vector(1.234, 1), np.ones(1, dtype=complex))
    assert np.allclose(steering_vector(math.pi / 2, 2, 0.5), [1, -1], atol=1e-15)


def test_steering_unit_modulus_first_entry_one():
    rng = np.random.default_rng(2)
    for ang in rng.uniform(-math.pi / 2, 3 * math.pi / 2, size=50):
        a = steering_vector(ang, 8)
        assert a[0] == 1.0
        assert np.max(np.abs(np.abs(a) - 1)) <= 1e-12


def test_path_loss_examples():
    assert path_loss(1.0, 3) == 1.0
    assert path_loss(10.0, 3) == pytest.approx(1e-3, rel=1e-15)
    assert path_loss(math.hypot(20, 30), 3) == pytest.approx(2.1334e-5, rel=1e-4)
    with pytest.raises(DegenerateGeometry):
        path_loss(0.0, 3)


def test_comm_channel_reference_scene(scene):
    ch = build_comm_channel(scene)
    eta = math.hypot(20, 30) ** -3
    assert ch.eta_c == pytest.approx(eta, rel=1e-14)
    assert np.allclose(np.abs(ch.h_c) ** 2, eta, rtol=1e-13)
    assert np.vdot(ch.h_c, ch.h_c).real == pytest.approx(eta * scene.N_T, rel=1e-13)


def test_comm_channel_on_axis_is_real():
    sc = Scene(p_c=(30.0, 0.0))
    ch = build_comm_channel(sc)
    assert np.allclose(ch.h_c, math.sqrt(ch.eta_c) * np.ones(4))


def test_sense_channel_structure(scene):
    s = build_sense_channel(scene)
    sv = np.linalg.svd(s.H0, compute_uv=False)
    assert sv[1] <= 1e-12 * sv[0]
    assert np.linalg.norm(s.H0) ** 2 == pytest.approx(0.36 * scene.N_R * scene.N_T, rel=1e-13)
    assert s.tau == pytest.approx((math.hypot(100, 50) + 100.0) / 2.99792458e8, rel=1e-14)
    assert s.tau == pytest.approx((111.803 + 100) / 2.99792458e8, rel=1e-5)


def test_sense_degenerate():
    with pytest.raises(DegenerateGeometry):
        Scene(p_o=(0.0, 0.0))


def _fd(scene, k, h):
    e = np.zeros(2)
    e[k] = h
    sp = build_sense_channel(scene.replace(p_o=scene.p_o + e))
    sm = build_sense_channel(scene.replace(p_o=scene.p_o - e))
    return (sp.H0 - sm.H0) / (2 * h), (sp.tau - sm.tau) / (2 * h)


def _rel(a, b):
    return np.max(np.abs(np.asarray(a) - b)) / np.max(np.abs(b))


def test_derivatives_reference_scene_step_1e4(scene):
    s = build_sense_channel(scene)
    dHx, dtx = _fd(scene, 0, 1e-4)
    dHy, dty = _fd(scene, 1, 1e-4)
    assert _rel(dHx, s.dH_dx) <= 1e-6
    assert _rel(dHy, s.dH_dy) <= 1e-6
    assert _rel(dtx, s.dtau_dx) <= 1e-6
    assert _rel(dty, s.dtau_dy) <= 1e-6


def test_derivatives_random_scenes_cube_root_step():
    rng = np.random.default_rng(3)
    for _ in range(30):
        sc = random_scene(rng)
        s = build_sense_channel(sc)
        h = np.finfo(float).eps ** (1 / 3) * max(1.0, np.linalg.norm(sc.p_o))
        for k, dH, dt in ((0, s.dH_dx, s.dtau_dx), (1, s.dH_dy, s.dtau_dy)):
            fH, ft = _fd(sc, k, h)
            assert _rel(fH, dH) <= 1e-6
            assert _rel(ft, dt) <= 1e-6


def test_channels_are_pure(scene):
    a, b = build_sense_channel(scene), build_sense_channel(scene)
    assert np.array_equal(a.dH_dx, b.dH_dx) and a.tau == b.tau
    assert np.array_equal(build_comm_channel(scene).h_c, build_comm_channel(scene).h_c)


def test_scene_validation():
    with pytest.raises(ValueError):
        Scene(sigma_delta=-1.0)
    with pytest.raises(ValueError):
        Scene(N=0)
    assert Scene().dt == pytest.approx(1e-8)
    assert geometry.SPEED_OF_LIGHT == 2.99792458e8
