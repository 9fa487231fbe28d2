"""Flat-array inner kernels for the coupled payload-cable-quadcopter dynamics.

The kernels run either as numba nopython-compiled functions (default) or as
plain numpy, selected once at import time by the environment variable
``CABLELIFT_NUMBA`` ("0", "false", "no", "off" force the numpy path).
``benchmarks/bench_kernels.py`` compares the two paths.

Flat state layout (length 18 + 18n, float64):
    [0:3]   x0      payload position
    [3:6]   v0      payload velocity
    [6:15]  R0      payload attitude, row-major
    [15:18] Om0     payload body angular velocity
    per quad i, base = 18 + 18*i:
    [base:base+3]    q_i    cable direction (unit, points quad -> attachment)
    [base+3:base+6]  om_i   cable angular velocity (om_i . q_i = 0)
    [base+6:base+15] R_i    quadcopter attitude, row-major
    [base+15:base+18] Om_i  quadcopter body angular velocity

Actuation modes: 0 = ambient thrust vectors u_cmd per quad, quad attitude
frozen; 1 = scalar thrust f_cmd along the quad body z-axis plus body moments
m_cmd, quad rotational dynamics active.
"""

from __future__ import annotations

import os

import numpy as np

MODE_REDUCED = 0
MODE_FULL = 1


def _numba_requested():
    val = os.environ.get("CABLELIFT_NUMBA", "1").strip().lower()
    return val not in ("0", "false", "no", "off")


def _hat(v):
    m = np.zeros((3, 3))
    m[0, 1] = -v[2]
    m[0, 2] = v[1]
    m[1, 0] = v[2]
    m[1, 2] = -v[0]
    m[2, 0] = -v[1]
    m[2, 1] = v[0]
    return m


def _cross(a, b):
    out = np.empty(3)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


def _solve_accel(y, u, m0, g, j0bar, masses, lengths, rho):
    """Solve the coupled equations of motion for (xdd0, domega0, qdd).

    Unknowns are stacked as [xdd0, domega0, qdd_1 .. qdd_n]; the linear
    system couples the payload translation, payload rotation, and every
    cable through the rigid attachment geometry.
    """
    n = masses.shape[0]
    k = 3 * (n + 2)
    m_total = m0 + np.sum(masses)
    e3 = np.zeros(3)
    e3[2] = 1.0

    r0 = np.ascontiguousarray(y[6:15]).reshape(3, 3)
    om0 = y[15:18]
    om0h = _hat(om0)
    om0h2 = om0h @ om0h

    mrho = np.zeros(3)
    for i in range(n):
        mrho += masses[i] * rho[i]
    mrho_hat = _hat(mrho)

    a = np.zeros((k, k))
    b = np.zeros(k)

    # payload translation rows
    for d in range(3):
        a[d, d] = m_total
    a[0:3, 3:6] = -(r0 @ mrho_hat)
    b[0:3] = -m_total * g * e3 - r0 @ (om0h2 @ mrho)

    # payload rotation rows
    a[3:6, 0:3] = mrho_hat @ r0.T
    a[3:6, 3:6] = j0bar
    b[3:6] = -_cross(om0, j0bar @ om0)

    for i in range(n):
        mi = masses[i]
        li = lengths[i]
        rhoi = rho[i]
        rhoi_hat = _hat(rhoi)
        base = 18 + 18 * i
        qi = y[base:base + 3]
        omi = y[base + 3:base + 6]
        qih = _hat(qi)
        qih2 = qih @ qih
        ui = u[i]

        c = 6 + 3 * i
        a[0:3, c:c + 3] = -mi * li * np.eye(3)
        b[0:3] += ui

        a[3:6, c:c + 3] = -mi * li * (rhoi_hat @ r0.T)
        b[3:6] += rhoi_hat @ (r0.T @ (ui - mi * g * e3))

        a[c:c + 3, 0:3] = mi * qih2
        a[c:c + 3, 3:6] = -mi * (qih2 @ (r0 @ rhoi_hat))
        for d in range(3):
            a[c + d, c + d] = mi * li
        qdoti = _cross(omi, qi)
        qdot2 = qdoti[0] ** 2 + qdoti[1] ** 2 + qdoti[2] ** 2
        b[c:c + 3] = qih2 @ (ui - mi * (r0 @ (om0h2 @ rhoi)) - mi * g * e3) - mi * li * qdot2 * qi

    sol = np.linalg.solve(a, b)
    xdd = sol[0:3].copy()
    domega0 = sol[3:6].copy()
    qdd = np.empty((n, 3))
    for i in range(n):
        qdd[i] = sol[6 + 3 * i:9 + 3 * i]
    return xdd, domega0, qdd


def _thrust_vectors(y, mode, u_cmd, f_cmd, n):
    u = np.empty((n, 3))
    if mode == MODE_REDUCED:
        for i in range(n):
            u[i] = u_cmd[i]
    else:
        for i in range(n):
            base = 18 + 18 * i
            ri = np.ascontiguousarray(y[base + 6:base + 15]).reshape(3, 3)
            # thrust acts along the quad body z-axis
            u[i, 0] = f_cmd[i] * ri[0, 2]
            u[i, 1] = f_cmd[i] * ri[1, 2]
            u[i, 2] = f_cmd[i] * ri[2, 2]
    return u


def _rhs(y, mode, u_cmd, f_cmd, m_cmd, m0, g, j0bar, masses, lengths, rho, jq, jq_inv):
    n = masses.shape[0]
    u = _thrust_vectors(y, mode, u_cmd, f_cmd, n)
    xdd, domega0, qdd = _solve_accel(y, u, m0, g, j0bar, masses, lengths, rho)

    ydot = np.zeros_like(y)
    ydot[0:3] = y[3:6]
    ydot[3:6] = xdd
    r0 = np.ascontiguousarray(y[6:15]).reshape(3, 3)
    ydot[6:15] = (r0 @ _hat(y[15:18])).reshape(9)
    ydot[15:18] = domega0

    for i in range(n):
        base = 18 + 18 * i
        qi = y[base:base + 3]
        omi = y[base + 3:base + 6]
        ydot[base:base + 3] = _cross(omi, qi)
        ydot[base + 3:base + 6] = _cross(qi, qdd[i])
        if mode == MODE_FULL:
            ri = np.ascontiguousarray(y[base + 6:base + 15]).reshape(3, 3)
            omqi = y[base + 15:base + 18]
            ydot[base + 6:base + 15] = (ri @ _hat(omqi)).reshape(9)
            ydot[base + 15:base + 18] = jq_inv[i] @ (m_cmd[i] - _cross(omqi, jq[i] @ omqi))
    return ydot


def _project_rotation(r):
    u, s, vt = np.linalg.svd(r)
    m = u @ vt
    if np.linalg.det(m) < 0.0:
        u2 = u.copy()
        u2[:, 2] = -u2[:, 2]
        m = u2 @ vt
    return m


def _project(y, n):
    """Pull the integrated state back onto the manifold in place."""
    r0 = _project_rotation(np.ascontiguousarray(y[6:15]).reshape(3, 3))
    y[6:15] = r0.reshape(9)
    for i in range(n):
        base = 18 + 18 * i
        qi = y[base:base + 3]
        nq = np.sqrt(qi[0] ** 2 + qi[1] ** 2 + qi[2] ** 2)
        qi = qi / nq
        y[base:base + 3] = qi
        omi = y[base + 3:base + 6]
        y[base + 3:base + 6] = omi - (omi[0] * qi[0] + omi[1] * qi[1] + omi[2] * qi[2]) * qi
        ri = _project_rotation(np.ascontiguousarray(y[base + 6:base + 15]).reshape(3, 3))
        y[base + 6:base + 15] = ri.reshape(9)
    return y


def _rk4_step(y, mode, u_cmd, f_cmd, m_cmd, m0, g, j0bar, masses, lengths, rho, jq, jq_inv, dt):
    n = masses.shape[0]
    k1 = _rhs(y, mode, u_cmd, f_cmd, m_cmd, m0, g, j0bar, masses, lengths, rho, jq, jq_inv)
    k2 = _rhs(y + 0.5 * dt * k1, mode, u_cmd, f_cmd, m_cmd, m0, g, j0bar, masses, lengths, rho, jq, jq_inv)
    k3 = _rhs(y + 0.5 * dt * k2, mode, u_cmd, f_cmd, m_cmd, m0, g, j0bar, masses, lengths, rho, jq, jq_inv)
    k4 = _rhs(y + dt * k3, mode, u_cmd, f_cmd, m_cmd, m0, g, j0bar, masses, lengths, rho, jq, jq_inv)
    ynew = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return _project(ynew, n)


def _step_many(y, mode, u_cmd, f_cmd, m_cmd, m0, g, j0bar, masses, lengths, rho, jq, jq_inv, dt, nsteps):
    """Advance nsteps RK4 steps under a constant command. Returns (y, ok)."""
    out = y.copy()
    for _ in range(nsteps):
        out = _rk4_step(out, mode, u_cmd, f_cmd, m_cmd, m0, g, j0bar, masses, lengths, rho, jq, jq_inv, dt)
        if not np.all(np.isfinite(out)):
            return out, False
    return out, True


USING_NUMBA = False
if _numba_requested():
    try:
        from numba import njit

        _hat = njit(cache=True)(_hat)
        _cross = njit(cache=True)(_cross)
        _solve_accel = njit(cache=True)(_solve_accel)
        _thrust_vectors = njit(cache=True)(_thrust_vectors)
        _rhs = njit(cache=True)(_rhs)
        _project_rotation = njit(cache=True)(_project_rotation)
        _project = njit(cache=True)(_project)
        _rk4_step = njit(cache=True)(_rk4_step)
        _step_many = njit(cache=True)(_step_many)
        USING_NUMBA = True
    except ImportError:
        USING_NUMBA = False

solve_accel = _solve_accel
rhs = _rhs
rk4_step = _rk4_step
step_many = _step_many
project = _project
