import numpy as np
import pytest

from cablelift.dynamics import SystemState
from cablelift.geometry import exp_so3
from cablelift.linearization import build_equilibrium, linearize
from cablelift.scenarios import (rod_2quad_params, single_quad_pendulum_params,
                                 triangle_3quad_params)


@pytest.fixture(scope="session")
def rod_params():
    return rod_2quad_params()


@pytest.fixture(scope="session")
def tri_params():
    return triangle_3quad_params()


@pytest.fixture(scope="session")
def pend_params():
    return single_quad_pendulum_params()


@pytest.fixture(scope="session")
def rod_eq(rod_params):
    return build_equilibrium(rod_params)


@pytest.fixture(scope="session")
def tri_eq(tri_params):
    return build_equilibrium(tri_params)


@pytest.fixture(scope="session")
def pend_eq(pend_params):
    return build_equilibrium(pend_params)


@pytest.fixture(scope="session")
def rod_model(rod_params, rod_eq):
    return linearize(rod_params, rod_eq)


@pytest.fixture(scope="session")
def tri_model(tri_params, tri_eq):
    return linearize(tri_params, tri_eq)


@pytest.fixture(scope="session")
def pend_model(pend_params, pend_eq):
    return linearize(pend_params, pend_eq)


def hover_state(params, x0=(0.0, 0.0, 0.0)):
    n = params.n
    q = np.tile([0.0, 0.0, -1.0], (n, 1))
    return SystemState(np.asarray(x0, dtype=float), np.zeros(3), np.eye(3),
                       np.zeros(3), q, np.zeros((n, 3)))


def tilted_state(params, angle_deg, azimuth_deg=0.0, x0=(0.0, 0.0, 0.0)):
    n = params.n
    a = np.deg2rad(angle_deg)
    b = np.deg2rad(azimuth_deg)
    d = np.array([np.cos(b), np.sin(b), 0.0])
    q = np.tile(np.sin(a) * d - np.cos(a) * np.array([0.0, 0.0, 1.0]), (n, 1))
    return SystemState(np.asarray(x0, dtype=float), np.zeros(3), np.eye(3),
                       np.zeros(3), q, np.zeros((n, 3)))


def random_state(params, rng, spread=0.3):
    """Generic state in the lower-hemisphere chart with consistent rates."""
    n = params.n
    r0 = exp_so3(rng.normal(size=3) * spread)
    q = np.empty((n, 3))
    om = np.empty((n, 3))
    for i in range(n):
        qi = np.array([0.0, 0.0, -1.0]) + rng.normal(size=3) * spread
        qi /= np.linalg.norm(qi)
        q[i] = qi
        w = rng.normal(size=3)
        om[i] = w - np.dot(w, qi) * qi
    return SystemState(rng.normal(size=3) * 0.5, rng.normal(size=3) * 0.5,
                       r0, rng.normal(size=3) * 0.5, q, om)
