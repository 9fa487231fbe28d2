"""Hover equilibrium, reduced perturbation coordinates, and the linear model.

The reduced state z stacks perturbation coordinates about hover:
    z = [dx0 (3), eta0 (3), c_1 (2), ..., c_n (2),  and their rates]
where eta0 is the rotation vector of the payload attitude and c_i are the
first two components of xi_i = e3 x q_i (the third is identically zero).
Velocity entries are (v0, Omega0, d/dt c_i); at hover these coincide with
the time derivatives of the position entries to first order.

The linear model M xdd + G x = B du is reconstructed numerically: central
finite differences of the nonlinear accelerations give the state-space pair
(A0, B0), and the analytically assembled reduced mass matrix M recovers G
and B from the lower blocks. The nonlinear model stays the single source of
truth; fidelity is bounded by the remainder and step-halving tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import ActuationCommand, SystemState, accelerations
from .geometry import E3, ChartError, exp_so3, hat, log_so3

FD_STEP = 1e-5
_ASYM_TOL = 1e-5


class EquilibriumError(RuntimeError):
    """Hover thrusts do not balance the system (asymmetric attachments)."""


class LinearizationError(RuntimeError):
    """Finite-difference reconstruction failed a consistency check."""


@dataclass
class HoverEquilibrium:
    state: SystemState
    u: np.ndarray          # (n, 3) equilibrium thrust vectors
    f: np.ndarray          # (n,) scalar thrusts


@dataclass
class LinearModel:
    n: int
    a0: np.ndarray         # 2m x 2m, m = 6 + 2n
    b0: np.ndarray         # 2m x 3n
    m: np.ndarray          # m x m reduced mass matrix
    g: np.ndarray          # m x m stiffness-like matrix
    b: np.ndarray          # m x 3n input matrix

    @property
    def dim(self):
        return 6 + 2 * self.n


def build_equilibrium(params, x0_e=None, tol=1e-10):
    """Hover equilibrium with level payload, vertical cables, level quads.

    Per-quad thrust f_i = (m_i + m0/n) g shares the payload weight equally;
    the residual accelerations are verified to vanish, which requires the
    attachment geometry to balance (sum of m_i rho_i horizontal moments zero).
    """
    n = params.n
    x0_e = np.zeros(3) if x0_e is None else np.asarray(x0_e, dtype=float)
    q = np.tile(-E3, (n, 1))
    state = SystemState(x0_e, np.zeros(3), np.eye(3), np.zeros(3), q, np.zeros((n, 3)))
    f = (params.masses + params.m0 / n) * params.g
    u = np.outer(f, E3)
    der = accelerations(state, ActuationCommand.reduced(u), params)
    resid = max(np.max(np.abs(der.ddx0)), np.max(np.abs(der.dom0)), np.max(np.abs(der.ddq)))
    if resid > tol:
        raise EquilibriumError(
            f"hover thrusts leave residual acceleration {resid:.3e} > {tol:.1e}; "
            "equal load sharing requires balanced attachment geometry")
    return HoverEquilibrium(state=state, u=u, f=f)


def full_to_reduced(state, eq):
    """Map a full state into reduced perturbation coordinates about hover."""
    n = state.n
    m = 6 + 2 * n
    z = np.empty(2 * m)
    z[0:3] = state.x0 - eq.state.x0
    z[3:6] = log_so3(state.r0)
    z[m:m + 3] = state.v0
    z[m + 3:m + 6] = state.om0
    for i in range(n):
        q = state.q[i]
        if q[2] > 1.0 - 1e-6:
            raise ChartError(f"cable {i} is antipodal to the hover direction")
        xi = np.cross(E3, q)
        qdot = np.cross(state.om[i], q)
        xidot = np.cross(E3, qdot)
        z[6 + 2 * i:8 + 2 * i] = xi[0:2]
        z[m + 6 + 2 * i:m + 8 + 2 * i] = xidot[0:2]
    return z


def reduced_to_full(z, eq, params):
    """Exact lift of reduced coordinates back onto the manifold."""
    n = params.n
    m = 6 + 2 * n
    x0 = eq.state.x0 + z[0:3]
    r0 = exp_so3(z[3:6])
    v0 = z[m:m + 3]
    om0 = z[m + 3:m + 6]
    q = np.empty((n, 3))
    om = np.empty((n, 3))
    for i in range(n):
        c = z[6 + 2 * i:8 + 2 * i]
        cd = z[m + 6 + 2 * i:m + 8 + 2 * i]
        s = c[0] ** 2 + c[1] ** 2
        if s >= 1.0:
            raise ChartError(f"cable {i} coordinates leave the chart (|xi| >= 1)")
        # xi = e3 x q means q_x = xi_2, q_y = -xi_1, q_z < 0 on the chart
        qi = np.array([c[1], -c[0], -np.sqrt(1.0 - s)])
        qdot = np.array([cd[1], -cd[0], 0.0])
        qdot[2] = -(qi[0] * qdot[0] + qi[1] * qdot[1]) / qi[2]
        q[i] = qi
        om[i] = np.cross(qi, qdot)
    return SystemState(x0, v0, r0, om0, q, om)


def reduced_accel(z, du, eq, params):
    """Acceleration entries (ddx0, dOmega0, d/dt^2 c_i) of the reduced flow."""
    n = params.n
    state = reduced_to_full(z, eq, params)
    u = eq.u + du.reshape(n, 3)
    der = accelerations(state, ActuationCommand.reduced(u), params)
    out = np.empty(6 + 2 * n)
    out[0:3] = der.ddx0
    out[3:6] = der.dom0
    for i in range(n):
        xidd = np.cross(E3, der.ddq[i])
        out[6 + 2 * i:8 + 2 * i] = xidd[0:2]
    return out


def reduced_dynamics(z, du, eq, params):
    """Exact time derivative of z along the nonlinear flow (for fidelity tests)."""
    from .geometry import dlog_so3_inv_rate

    n = params.n
    m = 6 + 2 * n
    state = reduced_to_full(z, eq, params)
    zdot = np.empty(2 * m)
    zdot[0:3] = state.v0
    zdot[3:6] = dlog_so3_inv_rate(z[3:6], state.om0)
    for i in range(n):
        qdot = np.cross(state.om[i], state.q[i])
        xidot = np.cross(E3, qdot)
        zdot[6 + 2 * i:8 + 2 * i] = xidot[0:2]
    zdot[m:] = reduced_accel(z, du, eq, params)
    return zdot


def linearize(params, eq, h=FD_STEP):
    """Reconstruct (A0, B0) and (M, G, B) about the hover equilibrium.

    Central differences of the reduced accelerations give the lower blocks;
    the upper blocks are [0 I] by construction. Each column is checked for
    quadratic contamination: with f(0) = 0 at equilibrium, the even part
    f(+h) + f(-h) must stay below a small absolute tolerance.
    """
    n = params.n
    m = 6 + 2 * n
    nu = 3 * n
    f0 = reduced_accel(np.zeros(2 * m), np.zeros(nu), eq, params)
    if np.max(np.abs(f0)) > 1e-10:
        raise LinearizationError(f"equilibrium residual {np.max(np.abs(f0)):.3e} in reduced accelerations")

    lower_state = np.empty((m, 2 * m))
    for j in range(2 * m):
        dz = np.zeros(2 * m)
        dz[j] = h
        fp = reduced_accel(dz, np.zeros(nu), eq, params)
        fm = reduced_accel(-dz, np.zeros(nu), eq, params)
        asym = np.max(np.abs(fp + fm - 2.0 * f0))
        if asym > _ASYM_TOL:
            raise LinearizationError(f"state column {j}: even residual {asym:.3e} exceeds {_ASYM_TOL}")
        lower_state[:, j] = (fp - fm) / (2.0 * h)

    lower_input = np.empty((m, nu))
    for j in range(nu):
        du = np.zeros(nu)
        du[j] = h
        fp = reduced_accel(np.zeros(2 * m), du, eq, params)
        fm = reduced_accel(np.zeros(2 * m), -du, eq, params)
        asym = np.max(np.abs(fp + fm - 2.0 * f0))
        if asym > _ASYM_TOL:
            raise LinearizationError(f"input column {j}: even residual {asym:.3e} exceeds {_ASYM_TOL}")
        lower_input[:, j] = (fp - fm) / (2.0 * h)

    a0 = np.zeros((2 * m, 2 * m))
    a0[0:m, m:2 * m] = np.eye(m)
    a0[m:2 * m, :] = lower_state
    b0 = np.zeros((2 * m, nu))
    b0[m:2 * m, :] = lower_input

    m_red = reduced_mass_matrix(params)
    g_mat = -m_red @ lower_state[:, 0:m]
    b_mat = m_red @ lower_input
    return LinearModel(n=n, a0=a0, b0=b0, m=m_red, g=g_mat, b=b_mat)


def reduced_mass_matrix(params):
    """Kinetic-energy metric in reduced coordinates at the hover equilibrium."""
    n = params.n
    m = 6 + 2 * n
    # qdot = qm @ d/dt(c) on the chart at q = -e3
    qm = np.array([[0.0, 1.0], [-1.0, 0.0], [0.0, 0.0]])
    mm = np.zeros((m, m))
    mm[0:3, 0:3] = params.total_mass * np.eye(3)
    mm[3:6, 3:6] = params.j0bar
    s = np.zeros((3, 3))
    for i in range(n):
        s += params.masses[i] * hat(params.rho[i])
    mm[0:3, 3:6] = -s
    mm[3:6, 0:3] = -s.T
    for i in range(n):
        mi, li = params.masses[i], params.lengths[i]
        c = 6 + 2 * i
        blk = -mi * li * qm
        mm[0:3, c:c + 2] = blk
        mm[c:c + 2, 0:3] = blk.T
        blk = -mi * li * (hat(params.rho[i]) @ qm)
        mm[3:6, c:c + 2] = blk
        mm[c:c + 2, 3:6] = blk.T
        mm[c:c + 2, c:c + 2] = mi * li * li * np.eye(2)
    return mm


def input_matrix(params):
    """Analytic input matrix B of the reduced model (virtual-work pairing)."""
    n = params.n
    m = 6 + 2 * n
    qm = np.array([[0.0, 1.0], [-1.0, 0.0], [0.0, 0.0]])
    b = np.zeros((m, 3 * n))
    for i in range(n):
        c = 3 * i
        b[0:3, c:c + 3] = np.eye(3)
        b[3:6, c:c + 3] = hat(params.rho[i])
        b[6 + 2 * i:8 + 2 * i, c:c + 3] = -params.lengths[i] * qm.T
    return b


def closed_loop(model, k):
    """Eigenvalues of A0 - B0 K and whether the loop is strictly Hurwitz."""
    k = np.asarray(k, dtype=float)
    expected = (model.b0.shape[1], model.a0.shape[0])
    if k.shape != expected:
        raise ValueError(f"gain matrix must have shape {expected}, got {k.shape}")
    eigs = np.linalg.eigvals(model.a0 - model.b0 @ k)
    return eigs, bool(np.all(eigs.real < 0.0))


def _attitude_indices(n):
    """Reduced-coordinate indices excluding the rigid-translation pairs."""
    m = 6 + 2 * n
    pos = list(range(3, m))
    return np.array(pos + [m + j for j in pos])


def controllable_subspace(a, b, tol=1e-8):
    """Orthonormal basis of the Krylov reachability span of (A, B).

    Grows the basis column by column, adding a direction only when its
    component outside the current span is significant relative to the mapped
    vector. Exactly decoupled modes (zero residual) stay excluded.
    """
    u, s, _ = np.linalg.svd(b, full_matrices=False)
    v = u[:, s > tol * max(s[0], 1e-300)]
    frontier = v
    for _ in range(a.shape[0]):
        w = a @ frontier
        added = []
        for j in range(w.shape[1]):
            c = w[:, j].copy()
            scale = np.linalg.norm(c)
            for _ in range(2):
                c -= v @ (v.T @ c)
                if added:
                    av = np.column_stack(added)
                    c -= av @ (av.T @ c)
            if np.linalg.norm(c) > tol * (1.0 + scale):
                added.append(c / np.linalg.norm(c))
        if not added:
            break
        frontier = np.column_stack(added)
        v = np.hstack([v, frontier])
    return v


def controlled_subspace_eigs(model, k):
    """Closed-loop eigenvalues restricted to the controllable subspace.

    The subspace reachable through the thrust inputs is invariant under any
    state feedback, so its closed-loop spectrum is well defined; structurally
    unactuated modes (for a rod payload, roll about the attachment line) stay
    excluded. K is the stacked feedback including any leader-channel rows.
    """
    v = controllable_subspace(model.a0, model.b0)
    a_cl = model.a0 - model.b0 @ np.asarray(k, dtype=float)
    return np.linalg.eigvals(v.T @ a_cl @ v)


def save_linear_model(model, path):
    """Plain-text export: one block per matrix, row-major, dimension header."""
    blocks = [("A0", model.a0), ("B0", model.b0), ("M", model.m),
              ("G", model.g), ("B", model.b)]
    with open(path, "w") as fh:
        fh.write(f"cablelift-linear-model 1 n={model.n}\n")
        for name, mat in blocks:
            fh.write(f"{name} {mat.shape[0]} {mat.shape[1]}\n")
            for row in mat:
                fh.write(" ".join(repr(float(x)) for x in row) + "\n")


def load_linear_model(path):
    with open(path) as fh:
        header = fh.readline().split()
        if header[:2] != ["cablelift-linear-model", "1"]:
            raise ValueError(f"unrecognized linear-model file header: {header}")
        n = int(header[2].split("=")[1])
        mats = {}
        line = fh.readline()
        while line:
            name, rows, cols = line.split()
            rows, cols = int(rows), int(cols)
            data = [[float(x) for x in fh.readline().split()] for _ in range(rows)]
            mats[name] = np.array(data).reshape(rows, cols)
            line = fh.readline()
    return LinearModel(n=n, a0=mats["A0"], b0=mats["B0"], m=mats["M"],
                       g=mats["G"], b=mats["B"])
