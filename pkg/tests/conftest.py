import numpy as np
import pytest

from ellipsect import alonso_c, ellipsoid, sphere, superellipsoid


def random_ellipsoid(rng):
    """Semi-axes uniform in [0.5, 2], uniformly random rotation, translation in [-1, 1]^3."""
    from scipy.spatial.transform import Rotation

    rotvec = Rotation.random(random_state=rng).as_rotvec()
    return ellipsoid(*rng.uniform(0.5, 2.0, 3), rotvec=rotvec, center=rng.uniform(-1, 1, 3))


def unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


@pytest.fixture(scope="session")
def body_c():
    return alonso_c()


@pytest.fixture(scope="session")
def superball():
    return superellipsoid(4)


@pytest.fixture(scope="session")
def unit_sphere():
    return sphere()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
