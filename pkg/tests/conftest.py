import numpy as np
import pytest

from issc.fim import build_zeta
from issc.geometry import Scene, build_comm_channel, build_sense_channel


@pytest.fixture(scope="session")
def scene():
    return Scene()


@pytest.fixture(scope="session")
def h_c(scene):
    return build_comm_channel(scene).h_c


@pytest.fixture(scope="session")
def sense(scene):
    return build_sense_channel(scene)


@pytest.fixture(scope="session")
def zeta(scene, sense):
    return build_zeta(sense, scene)


def random_scene(rng, **kw):
    """Scene with nodes scattered in a 200 m box, kept apart by at least 5 m."""
    while True:
        pts = rng.uniform(-100, 100, size=(4, 2))
        d = np.linalg.norm(pts[:, None] - pts[None], axis=-1)
        if np.min(d[np.triu_indices(4, 1)]) > 5:
            break
    return Scene(p_b=pts[0], p_o=pts[1], p_c=pts[2], p_r=pts[3], **kw)


def random_beams(rng, n, scale=1.0):
    from issc.link import BeamPair

    c = lambda: scale * (rng.normal(size=n) + 1j * rng.normal(size=n))
    return BeamPair(c(), c())


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
