"""Brute-force Lagrangian reference dynamics for cross-checking the simulator.

Everything here works in local chart coordinates and extracts the equations
of motion numerically from the energy functions alone (Lagrange-d'Alembert
with finite differences). It intentionally shares no code with the solver it
checks: rotation helpers are reimplemented inline, and no function from
``_kernels`` or ``dynamics.accelerations`` is called.

Used only by the test suite; the simulator never imports this module.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import solve_ivp

# balances 4th-order truncation against roundoff amplified by small inertias
_FD_H = 3e-3


def _hat(v):
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def _exp(v):
    th = np.linalg.norm(v)
    vh = _hat(v)
    if th < 1e-8:
        return np.eye(3) + vh + 0.5 * (vh @ vh)
    return np.eye(3) + (np.sin(th) / th) * vh + ((1.0 - np.cos(th)) / th ** 2) * (vh @ vh)


def _jr(v):
    """Right Jacobian of the rotation exponential: Omega = J_r(v) @ vdot."""
    th = np.linalg.norm(v)
    vh = _hat(v)
    if th < 1e-6:
        a = 0.5 - th * th / 24.0
        b = 1.0 / 6.0 - th * th / 120.0
    else:
        a = (1.0 - np.cos(th)) / th ** 2
        b = (th - np.sin(th)) / th ** 3
    return np.eye(3) - a * vh + b * (vh @ vh)


class LagrangianChart:
    """Local coordinates centered on a reference configuration.

    Coordinates y (length 6 + 2n): payload translation offset (3), payload
    rotation vector eta with R0 = R0_ref exp(hat(eta)) (3), and two rotation
    components per cable about an orthonormal basis of the plane normal to
    the reference cable direction.
    """

    def __init__(self, state, params):
        self.params = params
        self.n = params.n
        self.x0_ref = state.x0.copy()
        self.r0_ref = state.r0.copy()
        self.q_ref = state.q.copy()
        self.basis = np.empty((self.n, 2, 3))
        for i in range(self.n):
            q = self.q_ref[i]
            seed = np.array([1.0, 0.0, 0.0])
            if abs(q[0]) > 0.9:
                seed = np.array([0.0, 1.0, 0.0])
            e1 = np.cross(q, seed)
            e1 /= np.linalg.norm(e1)
            e2 = np.cross(q, e1)
            self.basis[i, 0] = e1
            self.basis[i, 1] = e2
        self.dim = 6 + 2 * self.n

    def velocity_coords(self, state):
        """Chart velocity at the chart center matching the given state."""
        ydot = np.zeros(self.dim)
        ydot[0:3] = state.v0
        ydot[3:6] = state.om0
        for i in range(self.n):
            ydot[6 + 2 * i] = float(np.dot(state.om[i], self.basis[i, 0]))
            ydot[7 + 2 * i] = float(np.dot(state.om[i], self.basis[i, 1]))
        return ydot

    def _cable_vec(self, y, i):
        return y[6 + 2 * i] * self.basis[i, 0] + y[7 + 2 * i] * self.basis[i, 1]

    def configuration(self, y):
        """(x0, R0, q list) at chart coordinates y."""
        x0 = self.x0_ref + y[0:3]
        r0 = self.r0_ref @ _exp(y[3:6])
        q = np.empty((self.n, 3))
        for i in range(self.n):
            q[i] = _exp(self._cable_vec(y, i)) @ self.q_ref[i]
        return x0, r0, q

    def velocities(self, y, ydot):
        """(v0, Omega0, qdot list) at (y, ydot); exact chart kinematics."""
        v0 = ydot[0:3]
        om0 = _jr(y[3:6]) @ ydot[3:6]
        qdot = np.empty((self.n, 3))
        for i in range(self.n):
            a = self._cable_vec(y, i)
            adot = ydot[6 + 2 * i] * self.basis[i, 0] + ydot[7 + 2 * i] * self.basis[i, 1]
            qdot[i] = _exp(a) @ np.cross(_jr(a) @ adot, self.q_ref[i])
        return v0, om0, qdot

    def quad_positions(self, y):
        x0, r0, q = self.configuration(y)
        p = self.params
        return np.array([x0 + r0 @ p.rho[i] - p.lengths[i] * q[i] for i in range(self.n)])

    def kinetic(self, y, ydot):
        p = self.params
        x0, r0, q = self.configuration(y)
        v0, om0, qdot = self.velocities(y, ydot)
        t = 0.5 * p.m0 * float(np.dot(v0, v0)) + 0.5 * float(om0 @ p.j0 @ om0)
        for i in range(self.n):
            vi = v0 + r0 @ np.cross(om0, p.rho[i]) - p.lengths[i] * qdot[i]
            t += 0.5 * p.masses[i] * float(np.dot(vi, vi))
        return t

    def potential(self, y):
        p = self.params
        x0, r0, q = self.configuration(y)
        v = p.m0 * p.g * x0[2]
        for i in range(self.n):
            xi = x0 + r0 @ p.rho[i] - p.lengths[i] * q[i]
            v += p.masses[i] * p.g * xi[2]
        return v

    def lagrangian(self, y, ydot):
        return self.kinetic(y, ydot) - self.potential(y)

    def mass_matrix(self, y):
        """Kinetic metric A with T = 0.5 ydot' A ydot, by exact polarization."""
        m = self.dim
        a = np.empty((m, m))
        basis_t = np.empty(m)
        for j in range(m):
            ej = np.zeros(m)
            ej[j] = 1.0
            basis_t[j] = self.kinetic(y, ej)
            a[j, j] = 2.0 * basis_t[j]
        for j in range(m):
            ej = np.zeros(m)
            ej[j] = 1.0
            for k in range(j + 1, m):
                ek = np.zeros(m)
                ek[k] = 1.0
                cross = self.kinetic(y, ej + ek) - basis_t[j] - basis_t[k]
                a[j, k] = cross
                a[k, j] = cross
        return a

    def _d5(self, f, y, direction, h):
        """Fourth-order directional derivative of f along a unit direction."""
        return (-f(y + 2.0 * h * direction) + 8.0 * f(y + h * direction)
                - 8.0 * f(y - h * direction) + f(y - 2.0 * h * direction)) / (12.0 * h)

    def generalized_force(self, y, u, h=_FD_H):
        """Q_k = sum_i u_i . d x_i / d y_k by 4th-order central differences."""
        m = self.dim
        q = np.zeros(m)
        for k in range(m):
            ek = np.zeros(m)
            ek[k] = 1.0
            dx = self._d5(self.quad_positions, y, ek, h)
            for i in range(self.n):
                q[k] += float(np.dot(u[i], dx[i]))
        return q

    def accel(self, y, ydot, u, h=_FD_H):
        """Chart accelerations from the Lagrange-d'Alembert principle.

        Solves A(y) yddot = Q + dL/dy - dA/dt ydot with every derivative of
        the Lagrangian estimated by 4th-order finite differences.
        """
        m = self.dim
        a = self.mass_matrix(y)

        dldy = np.empty(m)
        for k in range(m):
            ek = np.zeros(m)
            ek[k] = 1.0
            dldy[k] = self._d5(lambda yy: self.lagrangian(yy, ydot), y, ek, h)

        speed = np.linalg.norm(ydot)
        if speed > 0.0:
            da = self._d5(self.mass_matrix, y, ydot / speed, h)
            gamma = speed * (da @ ydot)
        else:
            gamma = np.zeros(m)

        rhs = self.generalized_force(y, u, h=h) + dldy - gamma
        return np.linalg.solve(a, rhs)


def oracle_accelerations(state, u, params):
    """Reference (xdd0, domega0, qdd) at the given state under thrusts u."""
    chart = LagrangianChart(state, params)
    y = np.zeros(chart.dim)
    ydot = chart.velocity_coords(state)
    ydd = chart.accel(y, ydot, np.atleast_2d(u))
    xdd0 = ydd[0:3]
    domega0 = ydd[3:6]
    qdd = np.empty((params.n, 3))
    for i in range(params.n):
        adot = ydot[6 + 2 * i] * chart.basis[i, 0] + ydot[7 + 2 * i] * chart.basis[i, 1]
        add = ydd[6 + 2 * i] * chart.basis[i, 0] + ydd[7 + 2 * i] * chart.basis[i, 1]
        qi = chart.q_ref[i]
        qdd[i] = np.cross(add, qi) + np.cross(adot, np.cross(adot, qi))
    return xdd0, domega0, qdd


_PENDULUM_CACHE = {}


def _pendulum_symbolic():
    """Symbolic Euler-Lagrange model of one quad with a point payload.

    Coordinates are the payload position and two cable tilt angles with
    q(a, b) = Rx(a) Ry(b) (-e3); the equations of motion come from symbolic
    differentiation of the Lagrangian, then get lambdified. Cached per
    process since the derivation costs a few seconds.
    """
    if "fns" in _PENDULUM_CACHE:
        return _PENDULUM_CACHE["fns"]
    import sympy as sp

    t = sp.symbols("t")
    m0_s, m1_s, l_s, g_s = sp.symbols("m0 m1 l g", positive=True)
    u1, u2, u3 = sp.symbols("u1 u2 u3")
    x = [sp.Function(f"x{k}")(t) for k in range(3)]
    a = sp.Function("a")(t)
    b = sp.Function("b")(t)
    ca, sa, cb, sb = sp.cos(a), sp.sin(a), sp.cos(b), sp.sin(b)
    q = sp.Matrix([-sb, sa * cb, -ca * cb])
    x0 = sp.Matrix(x)
    xq = x0 - l_s * q
    v0 = x0.diff(t)
    vq = xq.diff(t)
    lag = (m0_s / 2) * (v0.T * v0)[0] + (m1_s / 2) * (vq.T * vq)[0] \
        - g_s * (m0_s * x0[2] + m1_s * xq[2])
    coords = [x[0], x[1], x[2], a, b]
    u_vec = sp.Matrix([u1, u2, u3])
    eqs = []
    for c in coords:
        gen_force = (xq.diff(c).T * u_vec)[0]
        eqs.append(sp.diff(sp.diff(lag, sp.diff(c, t)), t) - sp.diff(lag, c) - gen_force)

    dd = [sp.diff(c, (t, 2)) for c in coords]
    mass, rhs = sp.linear_eq_to_matrix(eqs, dd)
    subs = {}
    y_syms = sp.symbols("y0:5")
    yd_syms = sp.symbols("yd0:5")
    for c, ys, yds in zip(coords, y_syms, yd_syms):
        subs[sp.diff(c, t)] = yds
        subs[c] = ys
    mass = mass.subs(subs)
    rhs = rhs.subs(subs)
    args = list(y_syms) + list(yd_syms) + [m0_s, m1_s, l_s, g_s, u1, u2, u3]
    fns = (sp.lambdify(args, mass, "numpy"), sp.lambdify(args, rhs, "numpy"))
    _PENDULUM_CACHE["fns"] = fns
    return fns


def pendulum_reference_trajectory(state0, u, params, t_eval, rtol=1e-11, atol=1e-13):
    """High-accuracy reference trajectory for the single-quad pendulum.

    Integrates the symbolically derived minimal-coordinate dynamics (centered
    attachment, point-like payload) and returns (x0, quad position, q)
    sampled at t_eval. Valid while the cable stays within the angle chart,
    plenty for moderate swings.
    """
    if params.n != 1 or np.max(np.abs(params.rho)) > 0.0:
        raise ValueError("reference model covers one quad with a centered attachment")
    mass_fn, rhs_fn = _pendulum_symbolic()
    u = np.asarray(u, dtype=float).reshape(3)
    m0, m1 = params.m0, float(params.masses[0])
    l, g = float(params.lengths[0]), params.g

    q0 = state0.q[0]
    b0 = -np.arcsin(np.clip(q0[0], -1.0, 1.0))
    a0 = np.arctan2(q0[1], -q0[2])
    qdot0 = np.cross(state0.om[0], q0)
    # tangent basis dq/da, dq/db at (a0, b0)
    ca, sa, cb, sb = np.cos(a0), np.sin(a0), np.cos(b0), np.sin(b0)
    dqda = np.array([0.0, ca * cb, sa * cb])
    dqdb = np.array([-cb, -sa * sb, ca * sb])
    basis = np.column_stack([dqda, dqdb])
    rates, *_ = np.linalg.lstsq(basis, qdot0, rcond=None)
    z0 = np.concatenate([state0.x0, [a0, b0], state0.v0, rates])

    def rhs(_t, z):
        args = list(z) + [m0, m1, l, g, u[0], u[1], u[2]]
        mass = np.asarray(mass_fn(*args), dtype=float)
        b = np.asarray(rhs_fn(*args), dtype=float).reshape(5)
        ydd = np.linalg.solve(mass, b)
        return np.concatenate([z[5:], ydd])

    sol = solve_ivp(rhs, (0.0, float(t_eval[-1])), z0, method="DOP853",
                    t_eval=t_eval, rtol=rtol, atol=atol)
    if not sol.success:
        raise RuntimeError(f"reference integration failed: {sol.message}")

    nt = len(t_eval)
    x0s = sol.y[0:3, :].T.copy()
    qs = np.empty((nt, 3))
    quads = np.empty((nt, 3))
    for k in range(nt):
        a, b = sol.y[3, k], sol.y[4, k]
        q = np.array([-np.sin(b), np.sin(a) * np.cos(b), -np.cos(a) * np.cos(b)])
        qs[k] = q
        quads[k] = x0s[k] - l * q
    return x0s, quads, qs
