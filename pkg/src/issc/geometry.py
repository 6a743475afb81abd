"""
Planar scene geometry, array steering vectors and the two propagation channels.

The transmitter (TR) serves a single-antenna communication receiver (CRE)
over a line-of-sight link and illuminates a point target whose echo is
collected by a separate sensing receiver (SRE). The sensing channel is the
rank-one matrix ``beta0 * a_R(phi) a_T(theta)^H``; its derivatives with
respect to the target coordinates feed the Fisher information in ``fim``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGeometry

SPEED_OF_LIGHT = 2.99792458e8


def _pos(p):
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.shape != (2,):
        raise ValueError(f"positions are 2-D, got shape {p.shape}")
    return p


@dataclass(frozen=True)
class Scene:
    """Physical scenario. All quantities in SI units."""

    p_b: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0]))
    p_o: np.ndarray = field(default_factory=lambda: np.array([100.0, 50.0]))
    p_c: np.ndarray = field(default_factory=lambda: np.array([20.0, 30.0]))
    p_r: np.ndarray = field(default_factory=lambda: np.array([0.0, 50.0]))
    N_T: int = 4
    N_R: int = 4
    d_a_over_lambda: float = 0.5
    epsilon: float = 3.0
    beta0: complex = 0.6
    sigma_n2: float = 1e-8
    sigma_s2: float = 1e-8
    sigma_delta: float = 100e-9
    c0: float = SPEED_OF_LIGHT
    bandwidth_hz: float = 100e6
    N: int = 1024

    def __post_init__(self):
        for name in ("p_b", "p_o", "p_c", "p_r"):
            object.__setattr__(self, name, _pos(getattr(self, name)))
        object.__setattr__(self, "beta0", complex(self.beta0))
        if self.N_T < 1 or self.N_R < 1:
            raise ValueError("antenna counts must be >= 1")
        if self.N < 1:
            raise ValueError("sample count N must be >= 1")
        if self.epsilon <= 0:
            raise ValueError("path-loss exponent must be positive")
        if self.sigma_n2 <= 0 or self.sigma_s2 <= 0:
            raise ValueError("noise powers must be positive")
        if self.sigma_delta < 0:
            raise ValueError("sigma_delta must be non-negative")
        if self.bandwidth_hz <= 0 or self.c0 <= 0:
            raise ValueError("bandwidth and propagation speed must be positive")
        pts = [self.p_b, self.p_o, self.p_c, self.p_r]
        for i in range(4):
            for j in range(i + 1, 4):
                if np.linalg.norm(pts[i] - pts[j]) <= 0:
                    raise DegenerateGeometry("node positions must be pairwise distinct")

    @property
    def dt(self):
        """Sampling interval, tied to the bandwidth as 1/B."""
        return 1.0 / self.bandwidth_hz

    def replace(self, **changes):
        kw = {k: getattr(self, k) for k in self.__dataclass_fields__}
        kw.update(changes)
        return Scene(**kw)


@dataclass(frozen=True)
class CommChannel:
    h_c: np.ndarray
    eta_c: float
    varphi: float


@dataclass(frozen=True)
class SenseChannel:
    H0: np.ndarray
    theta: float
    phi: float
    tau: float
    dH_dx: np.ndarray
    dH_dy: np.ndarray
    dtau_dx: float
    dtau_dy: float


def angle_between(p_from, p_to):
    """Direction of ``p_to`` seen from ``p_from``.

    Uses ``arctan(dy/dx) + pi * 1{dx < 0}``, so the branch lies in
    [-pi/2, 3pi/2).
    """
    d = _pos(p_to) - _pos(p_from)
    if not np.any(d):
        raise DegenerateGeometry("angle between coincident points")
    ang = float(np.arctan2(d[1], d[0]))
    if ang < -np.pi / 2:
        ang += 2 * np.pi
    return ang


def steering_vector(angle, n_ant, d_a_over_lambda=0.5):
    k = np.arange(n_ant)
    return np.exp(1j * 2 * np.pi * k * d_a_over_lambda * np.sin(angle))


def _steering_derivative(angle, n_ant, d_a_over_lambda):
    k = np.arange(n_ant)
    a = steering_vector(angle, n_ant, d_a_over_lambda)
    return 1j * 2 * np.pi * k * d_a_over_lambda * np.cos(angle) * a


def path_loss(d, epsilon):
    if d <= 0:
        raise DegenerateGeometry(f"non-positive distance {d}")
    return float(d) ** (-epsilon)


def build_comm_channel(scene):
    d_c = float(np.linalg.norm(scene.p_c - scene.p_b))
    eta = path_loss(d_c, scene.epsilon)
    varphi = angle_between(scene.p_b, scene.p_c)
    h = np.sqrt(eta) * steering_vector(varphi, scene.N_T, scene.d_a_over_lambda)
    return CommChannel(h_c=h, eta_c=eta, varphi=varphi)


def build_sense_channel(scene):
    """Sensing channel and its derivatives w.r.t. the target coordinates.

    The reflection coefficient is held fixed when differentiating; only the
    two angles and the bistatic delay move with the target.
    """
    rel_b = scene.p_o - scene.p_b
    rel_r = scene.p_o - scene.p_r
    d_b = float(np.linalg.norm(rel_b))
    d_r = float(np.linalg.norm(rel_r))
    if d_b <= 0 or d_r <= 0:
        raise DegenerateGeometry("target coincides with TR or SRE")

    theta = angle_between(scene.p_b, scene.p_o)
    phi = angle_between(scene.p_r, scene.p_o)
    da = scene.d_a_over_lambda
    a_t = steering_vector(theta, scene.N_T, da)
    a_r = steering_vector(phi, scene.N_R, da)
    da_t = _steering_derivative(theta, scene.N_T, da)
    da_r = _steering_derivative(phi, scene.N_R, da)
    beta = scene.beta0

    H0 = beta * np.outer(a_r, a_t.conj())
    dH_dtheta = beta * np.outer(a_r, da_t.conj())
    dH_dphi = beta * np.outer(da_r, a_t.conj())

    # d(angle)/d(o_x), d(angle)/d(o_y) for angle = atan2(dy, dx)
    dtheta = np.array([-rel_b[1], rel_b[0]]) / d_b**2
    dphi = np.array([-rel_r[1], rel_r[0]]) / d_r**2

    dH_dx = dH_dtheta * dtheta[0] + dH_dphi * dphi[0]
    dH_dy = dH_dtheta * dtheta[1] + dH_dphi * dphi[1]

    tau = (d_b + d_r) / scene.c0
    dtau = (rel_b / d_b + rel_r / d_r) / scene.c0
    return SenseChannel(
        H0=H0,
        theta=theta,
        phi=phi,
        tau=tau,
        dH_dx=dH_dx,
        dH_dy=dH_dy,
        dtau_dx=float(dtau[0]),
        dtau_dy=float(dtau[1]),
    )
