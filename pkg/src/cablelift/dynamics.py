"""Nonlinear dynamics of n quadcopters carrying a cable-suspended rigid payload.

The model treats cables as massless, taut links, so quadcopter positions are
derived quantities: x_i = x0 + R0 rho_i - l_i q_i. Generalized coordinates
are the payload pose, the cable directions, and the quadcopter attitudes.
The equations of motion come from the Lagrange-d'Alembert principle applied
to the system Lagrangian; docs/dynamics.md carries the full derivation.

Two actuation modes are supported:
  * reduced: an ambient thrust vector u_i per quad, quad rotation frozen
    (used for linearization and gain design),
  * full: scalar thrust f_i along the quad body z-axis plus body moment M_i,
    with the quad rotational dynamics active.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .geometry import E3, check_rotation, check_unit, hat


class DegenerateGeometryError(RuntimeError):
    """The equation-of-motion system is singular (degenerate geometry)."""


class NumericalFailure(RuntimeError):
    """Integration produced a non-finite state."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


def _as_spd(j, name):
    j = np.asarray(j, dtype=float)
    if j.shape != (3, 3):
        raise ValueError(f"{name} must be 3x3")
    if np.max(np.abs(j - j.T)) > 1e-12:
        raise ValueError(f"{name} must be symmetric")
    if np.min(np.linalg.eigvalsh(j)) <= 0.0:
        raise ValueError(f"{name} must be positive definite")
    return j


@dataclass
class SystemParams:
    """Masses, inertias, and attachment geometry of one payload-quad system."""

    m0: float                      # payload mass, kg
    j0: np.ndarray                 # payload inertia, kg m^2
    masses: np.ndarray             # quad masses, kg, shape (n,)
    lengths: np.ndarray            # cable lengths, m, shape (n,)
    rho: np.ndarray                # attachment offsets in payload frame, m, shape (n, 3)
    jq: np.ndarray                 # quad inertias, kg m^2, shape (n, 3, 3)
    g: float = 9.81

    def __init__(self, m0, j0, masses, lengths, rho, jq=None, g=9.81, validate=True):
        self.m0 = float(m0)
        self.j0 = np.asarray(j0, dtype=float)
        self.masses = np.atleast_1d(np.asarray(masses, dtype=float))
        self.lengths = np.atleast_1d(np.asarray(lengths, dtype=float))
        self.rho = np.atleast_2d(np.asarray(rho, dtype=float))
        n = self.masses.shape[0]
        if jq is None:
            # flat-disc estimate for a 13 cm, 52 g frame; override per vehicle
            jq = np.tile(np.diag([3e-5, 3e-5, 5e-5]), (n, 1, 1))
        self.jq = np.asarray(jq, dtype=float)
        if self.jq.shape == (3, 3):
            self.jq = np.tile(self.jq, (n, 1, 1))
        self.g = float(g)
        if validate:
            self.validate()
        self._finalize()

    def validate(self):
        n = self.n
        if n < 1:
            raise ValueError("need at least one quadcopter")
        if self.m0 <= 0.0 or np.any(self.masses <= 0.0):
            raise ValueError("all masses must be positive")
        if np.any(self.lengths <= 0.0):
            raise ValueError("all cable lengths must be positive")
        if self.rho.shape != (n, 3):
            raise ValueError("rho must have shape (n, 3)")
        if self.jq.shape != (n, 3, 3):
            raise ValueError("jq must have shape (n, 3, 3)")
        _as_spd(self.j0, "j0")
        for i in range(n):
            _as_spd(self.jq[i], f"jq[{i}]")

    def _finalize(self):
        self.j0 = np.ascontiguousarray(self.j0)
        self.masses = np.ascontiguousarray(self.masses)
        self.lengths = np.ascontiguousarray(self.lengths)
        self.rho = np.ascontiguousarray(self.rho)
        self.jq = np.ascontiguousarray(self.jq)
        self.jq_inv = np.ascontiguousarray(np.linalg.inv(self.jq))
        # rotational inertia of the payload augmented by the attachment masses
        j0bar = self.j0.copy()
        for i in range(self.n):
            rh = hat(self.rho[i])
            j0bar += self.masses[i] * (rh.T @ rh)
        self.j0bar = np.ascontiguousarray(j0bar)

    @property
    def n(self):
        return self.masses.shape[0]

    @property
    def total_mass(self):
        return self.m0 + float(np.sum(self.masses))


@dataclass
class SystemState:
    """Payload pose/twist, cable directions/rates, quad attitudes/rates."""

    x0: np.ndarray
    v0: np.ndarray
    r0: np.ndarray
    om0: np.ndarray
    q: np.ndarray      # (n, 3) unit cable directions, quad -> attachment
    om: np.ndarray     # (n, 3) cable angular velocities, om . q = 0
    rq: np.ndarray     # (n, 3, 3) quad attitudes
    omq: np.ndarray    # (n, 3) quad body angular velocities

    def __init__(self, x0, v0, r0, om0, q, om, rq=None, omq=None):
        self.x0 = np.asarray(x0, dtype=float).reshape(3)
        self.v0 = np.asarray(v0, dtype=float).reshape(3)
        self.r0 = np.asarray(r0, dtype=float).reshape(3, 3)
        self.om0 = np.asarray(om0, dtype=float).reshape(3)
        self.q = np.atleast_2d(np.asarray(q, dtype=float))
        self.om = np.atleast_2d(np.asarray(om, dtype=float))
        n = self.q.shape[0]
        self.rq = (np.tile(np.eye(3), (n, 1, 1)) if rq is None
                   else np.asarray(rq, dtype=float).reshape(n, 3, 3))
        self.omq = (np.zeros((n, 3)) if omq is None
                    else np.asarray(omq, dtype=float).reshape(n, 3))

    @property
    def n(self):
        return self.q.shape[0]

    def validate(self, unit_tol=1e-9, perp_tol=1e-8):
        check_rotation(self.r0, name="r0")
        for i in range(self.n):
            check_unit(self.q[i], tol=unit_tol, name=f"q[{i}]")
            if abs(float(np.dot(self.om[i], self.q[i]))) > perp_tol:
                raise ValueError(f"om[{i}] is not perpendicular to q[{i}]")
            check_rotation(self.rq[i], name=f"rq[{i}]")

    def copy(self):
        return SystemState(self.x0.copy(), self.v0.copy(), self.r0.copy(), self.om0.copy(),
                           self.q.copy(), self.om.copy(), self.rq.copy(), self.omq.copy())

    def to_flat(self):
        n = self.n
        y = np.empty(18 + 18 * n)
        y[0:3] = self.x0
        y[3:6] = self.v0
        y[6:15] = self.r0.reshape(9)
        y[15:18] = self.om0
        for i in range(n):
            base = 18 + 18 * i
            y[base:base + 3] = self.q[i]
            y[base + 3:base + 6] = self.om[i]
            y[base + 6:base + 15] = self.rq[i].reshape(9)
            y[base + 15:base + 18] = self.omq[i]
        return y

    @classmethod
    def from_flat(cls, y, n):
        q = np.empty((n, 3))
        om = np.empty((n, 3))
        rq = np.empty((n, 3, 3))
        omq = np.empty((n, 3))
        for i in range(n):
            base = 18 + 18 * i
            q[i] = y[base:base + 3]
            om[i] = y[base + 3:base + 6]
            rq[i] = y[base + 6:base + 15].reshape(3, 3)
            omq[i] = y[base + 15:base + 18]
        return cls(y[0:3], y[3:6], y[6:15].reshape(3, 3), y[15:18], q, om, rq, omq)


@dataclass
class ActuationCommand:
    """Per-quad actuation: ambient thrust vectors or thrust scalar + moment."""

    mode: str                      # "reduced" | "full"
    u: np.ndarray = None           # (n, 3) thrust vectors, reduced mode
    f: np.ndarray = None           # (n,) scalar thrusts, full mode
    m: np.ndarray = None           # (n, 3) body moments, full mode

    @classmethod
    def reduced(cls, u):
        return cls(mode="reduced", u=np.atleast_2d(np.asarray(u, dtype=float)))

    @classmethod
    def full(cls, f, m):
        f = np.atleast_1d(np.asarray(f, dtype=float))
        if np.any(f < 0.0):
            raise ValueError("thrust must be non-negative; rotors cannot pull")
        return cls(mode="full", f=f, m=np.atleast_2d(np.asarray(m, dtype=float)))

    def _pack(self, n):
        if self.mode == "reduced":
            if self.u.shape != (n, 3):
                raise ValueError(f"expected u of shape ({n}, 3)")
            return (_kernels.MODE_REDUCED, np.ascontiguousarray(self.u),
                    np.zeros(n), np.zeros((n, 3)))
        if self.mode == "full":
            if self.f.shape != (n,) or self.m.shape != (n, 3):
                raise ValueError(f"expected f of shape ({n},) and m of shape ({n}, 3)")
            return (_kernels.MODE_FULL, np.zeros((n, 3)),
                    np.ascontiguousarray(self.f), np.ascontiguousarray(self.m))
        raise ValueError(f"unknown actuation mode {self.mode!r}")


@dataclass
class Derivatives:
    """State derivatives; first derivatives echoed for integrator use."""

    dx0: np.ndarray
    ddx0: np.ndarray
    dr0: np.ndarray
    dom0: np.ndarray
    dq: np.ndarray
    ddq: np.ndarray
    dom: np.ndarray
    drq: np.ndarray
    domq: np.ndarray


def quad_position(state, params, i):
    """Inertial position of quad i implied by the taut-cable geometry."""
    return state.x0 + state.r0 @ params.rho[i] - params.lengths[i] * state.q[i]


def quad_velocity(state, params, i):
    qdot = np.cross(state.om[i], state.q[i])
    return state.v0 + state.r0 @ np.cross(state.om0, params.rho[i]) - params.lengths[i] * qdot


def energy(state, params):
    """Total kinetic and potential energy (T, V) in joules."""
    t = 0.5 * params.m0 * float(np.dot(state.v0, state.v0))
    t += 0.5 * float(state.om0 @ params.j0 @ state.om0)
    v = params.m0 * params.g * state.x0[2]
    for i in range(params.n):
        xi = quad_position(state, params, i)
        vi = quad_velocity(state, params, i)
        t += 0.5 * params.masses[i] * float(np.dot(vi, vi))
        t += 0.5 * float(state.omq[i] @ params.jq[i] @ state.omq[i])
        v += params.masses[i] * params.g * xi[2]
    return t, v


def thrust_vectors(state, cmd, params):
    """Ambient thrust vectors actually applied, resolving full-mode attitude."""
    if cmd.mode == "reduced":
        return np.array(cmd.u, dtype=float)
    return np.array([cmd.f[i] * state.rq[i] @ E3 for i in range(params.n)])


def accelerations(state, cmd, params):
    """Solve the equations of motion for the state derivatives.

    Raises DegenerateGeometryError when the coupled system is singular, and
    never falls back to a pseudo-inverse.
    """
    n = params.n
    y = state.to_flat()
    mode, u_cmd, f_cmd, m_cmd = cmd._pack(n)
    try:
        ydot = _kernels.rhs(y, mode, u_cmd, f_cmd, m_cmd, params.m0, params.g,
                            params.j0bar, params.masses, params.lengths, params.rho,
                            params.jq, params.jq_inv)
    except np.linalg.LinAlgError as exc:
        raise DegenerateGeometryError(f"singular equation-of-motion system: {exc}") from exc
    if not np.all(np.isfinite(ydot)):
        raise DegenerateGeometryError("non-finite accelerations (ill-conditioned system)")
    dq = np.empty((n, 3))
    dom = np.empty((n, 3))
    drq = np.empty((n, 3, 3))
    domq = np.empty((n, 3))
    ddq = np.empty((n, 3))
    for i in range(n):
        base = 18 + 18 * i
        dq[i] = ydot[base:base + 3]
        dom[i] = ydot[base + 3:base + 6]
        drq[i] = ydot[base + 6:base + 15].reshape(3, 3)
        domq[i] = ydot[base + 15:base + 18]
        # qdd = domega x q + omega x qdot for omega . q = 0
        ddq[i] = np.cross(dom[i], state.q[i]) + np.cross(state.om[i], dq[i])
    return Derivatives(dx0=ydot[0:3], ddx0=ydot[3:6], dr0=ydot[6:15].reshape(3, 3),
                       dom0=ydot[15:18], dq=dq, ddq=ddq, dom=dom, drq=drq, domq=domq)


def eom_residual(state, cmd, params, der):
    """Max residual of the coupled equations of motion at the given derivatives.

    Independent check that the solved accelerations satisfy every equation;
    scales each block by (1 + |rhs block|) so the result reads as relative.
    """
    n = params.n
    u = thrust_vectors(state, cmd, params)
    r0, om0 = state.r0, state.om0
    om0h = hat(om0)
    g_e3 = params.g * E3
    worst = 0.0

    lhs = params.total_mass * der.ddx0
    rhs_v = np.zeros(3)
    for i in range(n):
        mi, li, rhoi = params.masses[i], params.lengths[i], params.rho[i]
        lhs += mi * (r0 @ (om0h @ om0h @ rhoi) - r0 @ hat(rhoi) @ der.dom0 - li * der.ddq[i])
        rhs_v += u[i]
    rhs_v -= params.total_mass * g_e3
    worst = max(worst, np.max(np.abs(lhs - rhs_v)) / (1.0 + np.linalg.norm(rhs_v)))

    lhs = params.j0bar @ der.dom0 + np.cross(om0, params.j0bar @ om0)
    rhs_v = np.zeros(3)
    for i in range(n):
        mi, li, rhoi = params.masses[i], params.lengths[i], params.rho[i]
        lhs += params.masses[i] * hat(rhoi) @ r0.T @ (der.ddx0 - li * der.ddq[i] + g_e3)
        rhs_v += hat(rhoi) @ r0.T @ u[i]
    worst = max(worst, np.max(np.abs(lhs - rhs_v)) / (1.0 + np.linalg.norm(rhs_v)))

    for i in range(n):
        mi, li, rhoi = params.masses[i], params.lengths[i], params.rho[i]
        qi = state.q[i]
        qih = hat(qi)
        qdot = np.cross(state.om[i], qi)
        lhs = mi * li * der.ddq[i] + mi * qih @ qih @ der.ddx0 \
            - mi * qih @ qih @ r0 @ hat(rhoi) @ der.dom0
        rhs_v = qih @ qih @ (u[i] - mi * r0 @ (om0h @ om0h @ rhoi) - mi * g_e3) \
            - mi * li * float(np.dot(qdot, qdot)) * qi
        worst = max(worst, np.max(np.abs(lhs - rhs_v)) / (1.0 + np.linalg.norm(rhs_v)))
    return worst


def cable_tensions(state, cmd, params, der=None):
    """Tension in each cable, newtons; negative values flag a slack violation."""
    if der is None:
        der = accelerations(state, cmd, params)
    u = thrust_vectors(state, cmd, params)
    om0h = hat(state.om0)
    tensions = np.empty(params.n)
    for i in range(params.n):
        mi, li, rhoi = params.masses[i], params.lengths[i], params.rho[i]
        xdd_i = der.ddx0 + state.r0 @ (om0h @ om0h @ rhoi) \
            - state.r0 @ hat(rhoi) @ der.dom0 - li * der.ddq[i]
        tensions[i] = float(np.dot(state.q[i], mi * xdd_i - u[i] + mi * params.g * E3))
    return tensions


def step(state, cmd, params, dt):
    """One fixed RK4 step with post-step projection onto the manifold."""
    return step_many(state, cmd, params, dt, 1)


def step_many(state, cmd, params, dt, nsteps):
    """nsteps RK4 steps under a constant command; projects after every step."""
    if not (0.0 < dt <= 0.01):
        raise ValueError(f"dt must be in (0, 0.01] s, got {dt}")
    n = params.n
    y = state.to_flat()
    mode, u_cmd, f_cmd, m_cmd = cmd._pack(n)
    try:
        ynew, ok = _kernels.step_many(y, mode, u_cmd, f_cmd, m_cmd, params.m0, params.g,
                                      params.j0bar, params.masses, params.lengths,
                                      params.rho, params.jq, params.jq_inv,
                                      float(dt), int(nsteps))
    except np.linalg.LinAlgError as exc:
        # with validated params the kinetic metric is uniformly positive
        # definite, so a singular solve mid-integration means divergence
        raise NumericalFailure(
            f"integration diverged to a non-finite state (dt={dt}): {exc}",
            state=state) from exc
    if not ok:
        bad = SystemState.from_flat(ynew, n)
        raise NumericalFailure(
            f"non-finite state after integration step (dt={dt}); last state attached",
            state=bad)
    return SystemState.from_flat(ynew, n)
