"""Control stack: leader policies, follower payload/cable attitude feedback,
thrust allocation, and the inner PID attitude loop.

Quad 1 is the leader and receives operator (or scripted) roll/pitch/thrust.
Quads 2..n are followers running two outer-loop feedback terms on top of
their hover thrust:
  * PAC, payload attitude control: damps payload attitude error,
  * CAC, cable attitude control: damps the follower's own cable swing.
The resulting thrust vector is realized by tilting the quad (small-angle
allocation to roll/pitch/thrust) and an inner per-axis PID on attitude.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_continuous_are

from .dynamics import ActuationCommand
from .geometry import E3, euler_rates_zyx, euler_zyx, rotation_zyx, so3_error
from .linearization import controllable_subspace, controlled_subspace_eigs, _attitude_indices

DEFAULT_ANGLE_BOUND = 0.35     # rad, small-angle validity limit for roll/pitch


class GainSynthesisError(RuntimeError):
    """Synthesized gains failed the closed-loop stability gate."""


@dataclass
class PidGains:
    kp: float
    ki: float
    kd: float

    def to_dict(self):
        return {"kp": self.kp, "ki": self.ki, "kd": self.kd}

    @classmethod
    def from_dict(cls, d):
        return cls(kp=float(d["kp"]), ki=float(d["ki"]), kd=float(d["kd"]))


@dataclass
class ControlGains:
    """All gain sets: follower outer loop, inner PID, leader PD.

    Payload-attitude gains are per quad: with a gain shared across followers
    every follower pushes identically, so the net payload torque lives in the
    plane normal to the leader attachment offset and the tilt axis along it
    is structurally unactuated. Differential gains restore that axis.
    """

    k_eta0: np.ndarray                 # (n, 3, 3) payload attitude (leader row unused)
    k_eta0_dot: np.ndarray             # (n, 3, 3) payload attitude rate
    k_xi: np.ndarray                   # (n, 3, 2) per-quad cable gains (leader row unused)
    k_xi_dot: np.ndarray               # (n, 3, 2)
    # inner loop tuned for the 52 g quad: ~0.08 s settling keeps a 7x
    # bandwidth separation above the outer-loop modes, which a slower inner
    # loop turns into a growing oscillation
    pid_roll: PidGains = field(default_factory=lambda: PidGains(0.09, 0.02, 0.0033))
    pid_pitch: PidGains = field(default_factory=lambda: PidGains(0.09, 0.02, 0.0033))
    pid_yaw: PidGains = field(default_factory=lambda: PidGains(0.1, 0.01, 0.0045))
    integral_clamp: float = 0.01       # N m bound on the integral contribution
    # gentle defaults: aggressive dragging of the payload (sideways legs in
    # particular) outruns the follower attitude loops
    leader_kp: np.ndarray = field(default_factory=lambda: np.array([0.1, 0.1, 0.5]))
    leader_kd: np.ndarray = field(default_factory=lambda: np.array([0.14, 0.14, 0.5]))
    angle_bound: float = DEFAULT_ANGLE_BOUND
    k_h: np.ndarray = None             # optional operator-model gain, analysis only

    def __post_init__(self):
        self.k_xi = np.asarray(self.k_xi, dtype=float)
        self.k_xi_dot = np.asarray(self.k_xi_dot, dtype=float)
        n = self.k_xi.shape[0]
        self.k_eta0 = np.asarray(self.k_eta0, dtype=float)
        self.k_eta0_dot = np.asarray(self.k_eta0_dot, dtype=float)
        if self.k_eta0.shape == (3, 3):
            self.k_eta0 = np.tile(self.k_eta0, (n, 1, 1))
        if self.k_eta0_dot.shape == (3, 3):
            self.k_eta0_dot = np.tile(self.k_eta0_dot, (n, 1, 1))
        self.leader_kp = np.asarray(self.leader_kp, dtype=float).reshape(3)
        self.leader_kd = np.asarray(self.leader_kd, dtype=float).reshape(3)
        for g in (self.pid_roll, self.pid_pitch, self.pid_yaw):
            if min(g.kp, g.ki, g.kd) < 0.0:
                raise ValueError("PID gains must be non-negative")

    @property
    def n(self):
        return self.k_xi.shape[0]

    def to_dict(self):
        d = {
            "k_eta0": self.k_eta0.tolist(),
            "k_eta0_dot": self.k_eta0_dot.tolist(),
            "k_xi": self.k_xi.tolist(),
            "k_xi_dot": self.k_xi_dot.tolist(),
            "pid_roll": self.pid_roll.to_dict(),
            "pid_pitch": self.pid_pitch.to_dict(),
            "pid_yaw": self.pid_yaw.to_dict(),
            "integral_clamp": self.integral_clamp,
            "leader_kp": self.leader_kp.tolist(),
            "leader_kd": self.leader_kd.tolist(),
            "angle_bound": self.angle_bound,
        }
        if self.k_h is not None:
            d["k_h"] = np.asarray(self.k_h).tolist()
        return d

    @classmethod
    def from_dict(cls, d):
        kwargs = dict(
            k_eta0=d["k_eta0"], k_eta0_dot=d["k_eta0_dot"],
            k_xi=np.asarray(d["k_xi"], dtype=float),
            k_xi_dot=np.asarray(d["k_xi_dot"], dtype=float),
            pid_roll=PidGains.from_dict(d["pid_roll"]),
            pid_pitch=PidGains.from_dict(d["pid_pitch"]),
            pid_yaw=PidGains.from_dict(d["pid_yaw"]),
            integral_clamp=float(d["integral_clamp"]),
            leader_kp=d["leader_kp"], leader_kd=d["leader_kd"],
            angle_bound=float(d["angle_bound"]),
        )
        if "k_h" in d:
            kwargs["k_h"] = np.asarray(d["k_h"], dtype=float)
        return cls(**kwargs)


@dataclass
class FollowerCommand:
    theta_d: float                     # desired pitch, rad
    phi_d: float                       # desired roll, rad
    f: float                           # thrust, N
    psi_d: float = 0.0                 # desired yaw, held at zero
    saturated: bool = False


@dataclass
class LeaderInput:
    """Operator channel: roll, pitch, thrust."""

    phi: float = 0.0
    theta: float = 0.0
    f: float = 0.0


def pac(eta0, eta0_dot, gains, i):
    """Payload attitude feedback for quad i: -(K_eta0 eta0 + K_eta0_dot eta0_dot)."""
    return -(gains.k_eta0[i] @ np.asarray(eta0, dtype=float)
             + gains.k_eta0_dot[i] @ np.asarray(eta0_dot, dtype=float))


def cac(xi, xi_dot, gains, i):
    """Cable attitude feedback for quad i on its own cable coordinates."""
    xi = np.asarray(xi, dtype=float)
    xi_dot = np.asarray(xi_dot, dtype=float)
    return -(gains.k_xi[i] @ xi[0:2] + gains.k_xi_dot[i] @ xi_dot[0:2])


def payload_signals(state):
    """(eta0, eta0_dot) feedback signals for a level hover target."""
    return so3_error(np.eye(3), state.r0), state.om0.copy()


def cable_signals(state, i):
    """(xi, xi_dot) for cable i; xi = e3 x q vanishes at the hover direction."""
    q = state.q[i]
    qdot = np.cross(state.om[i], q)
    return np.cross(E3, q), np.cross(E3, qdot)


def follower_outer_loop(state, eq, gains, i, noise=None):
    """Desired thrust vector for follower i: hover share plus PAC plus CAC."""
    if i < 1:
        raise ValueError("quad 0 is the leader; followers are quads 1..n-1")
    eta0, eta0_dot = payload_signals(state)
    xi, xi_dot = cable_signals(state, i)
    if noise is not None:
        eta0, eta0_dot, xi, xi_dot = noise.perturb(eta0, eta0_dot, xi, xi_dot)
    return eq.u[i] + pac(eta0, eta0_dot, gains, i) + cac(xi, xi_dot, gains, i)


def allocate(u_d, mass, g, angle_bound=DEFAULT_ANGLE_BOUND):
    """Roll/pitch/thrust realizing a desired thrust vector at small angles.

    The quad tilts so that thrust f along its body z-axis produces u_d: pitch
    moves force along +x, roll along -y, hence the sign on phi. Angles clamp
    to the small-angle bound and thrust clamps at zero; clamping sets the
    saturation flag.
    """
    u_d = np.asarray(u_d, dtype=float)
    if not np.all(np.isfinite(u_d)):
        raise ValueError("desired thrust vector must be finite")
    theta = u_d[0] / (mass * g)
    phi = -u_d[1] / (mass * g)
    f = u_d[2]
    saturated = False
    if abs(theta) > angle_bound:
        theta = np.clip(theta, -angle_bound, angle_bound)
        saturated = True
    if abs(phi) > angle_bound:
        phi = np.clip(phi, -angle_bound, angle_bound)
        saturated = True
    if f < 0.0:
        f = 0.0
        saturated = True
    return FollowerCommand(theta_d=float(theta), phi_d=float(phi), f=float(f),
                           saturated=saturated)


def input_to_thrust_vector(cmd_or_input):
    """Ambient thrust vector implied by tilt angles and scalar thrust."""
    if isinstance(cmd_or_input, LeaderInput):
        phi, theta, f = cmd_or_input.phi, cmd_or_input.theta, cmd_or_input.f
    else:
        phi, theta, f = cmd_or_input.phi_d, cmd_or_input.theta_d, cmd_or_input.f
    return f * (rotation_zyx(phi, theta) @ E3)


def leader_pd(state, target, gains, params, eq, noise=None):
    """Point-to-point PD on the leader quad position, mapped through allocate.

    ``target`` is the desired payload position; the leader quad target sits at
    the attachment offset plus one cable length above it.
    """
    from .dynamics import quad_position, quad_velocity

    quad_target = np.asarray(target, dtype=float) + params.rho[0] + params.lengths[0] * E3
    x = quad_position(state, params, 0)
    v = quad_velocity(state, params, 0)
    if noise is not None:
        x, v = noise.perturb_leader(x, v)
    du = gains.leader_kp * (quad_target - x) - gains.leader_kd * v
    cmd = allocate(eq.u[0] + du, params.masses[0], params.g, gains.angle_bound)
    return LeaderInput(phi=cmd.phi_d, theta=cmd.theta_d, f=cmd.f)


class AttitudePid:
    """Per-axis PID from attitude error to body moments, with anti-windup."""

    def __init__(self, gains):
        self.gains = gains
        self.integral = np.zeros(3)

    def reset(self):
        self.integral[:] = 0.0

    def update(self, desired, roll, pitch, yaw, omega_body, dt):
        g = self.gains
        err = np.array([desired.phi_d - roll, desired.theta_d - pitch, desired.psi_d - yaw])
        rates = euler_rates_zyx(roll, pitch, omega_body)
        ki = np.array([g.pid_roll.ki, g.pid_pitch.ki, g.pid_yaw.ki])
        self.integral += err * dt
        # clamp the integral so its torque contribution stays bounded
        for a in range(3):
            if ki[a] > 0.0:
                lim = g.integral_clamp / ki[a]
                self.integral[a] = np.clip(self.integral[a], -lim, lim)
        kp = np.array([g.pid_roll.kp, g.pid_pitch.kp, g.pid_yaw.kp])
        kd = np.array([g.pid_roll.kd, g.pid_pitch.kd, g.pid_yaw.kd])
        return kp * err + ki * self.integral + kd * (0.0 - rates)


@dataclass
class MeasurementNoise:
    """Optional zero-mean Gaussian noise on the controller feedback signals."""

    sigma_att: float = 0.0
    sigma_rate: float = 0.0
    sigma_cable: float = 0.0
    sigma_cable_rate: float = 0.0
    rng: np.random.Generator = None

    def perturb(self, eta0, eta0_dot, xi, xi_dot):
        r = self.rng
        return (eta0 + r.normal(0.0, self.sigma_att, 3),
                eta0_dot + r.normal(0.0, self.sigma_rate, 3),
                xi + r.normal(0.0, self.sigma_cable, 3),
                xi_dot + r.normal(0.0, self.sigma_cable_rate, 3))

    def perturb_leader(self, x, v):
        r = self.rng
        return (x + r.normal(0.0, self.sigma_att, 3),
                v + r.normal(0.0, self.sigma_rate, 3))


class ControlStack:
    """Per-tick command generation for all quads, owning the PID integrators."""

    def __init__(self, params, gains, eq, mode="full", pac_cac_enabled=True):
        self.params = params
        self.gains = gains
        self.eq = eq
        self.mode = mode
        self.pac_cac_enabled = pac_cac_enabled
        self.pids = [AttitudePid(gains) for _ in range(params.n)]
        self.last_follower_cmds = [None] * params.n

    def reset(self):
        for p in self.pids:
            p.reset()

    def tick(self, state, leader_input, dt, noise=None):
        """Build the actuation command applied for the next control period."""
        n = self.params.n
        cmds = [FollowerCommand(theta_d=leader_input.theta, phi_d=leader_input.phi,
                                f=max(leader_input.f, 0.0))]
        for i in range(1, n):
            if self.pac_cac_enabled:
                u_d = follower_outer_loop(state, self.eq, self.gains, i, noise=noise)
            else:
                u_d = self.eq.u[i].copy()
            cmds.append(allocate(u_d, self.params.masses[i], self.params.g,
                                 self.gains.angle_bound))
        self.last_follower_cmds = cmds

        if self.mode == "reduced":
            u = np.array([input_to_thrust_vector(c) for c in cmds])
            return ActuationCommand.reduced(u)

        f = np.empty(n)
        m = np.empty((n, 3))
        for i in range(n):
            roll, pitch, yaw = euler_zyx(state.rq[i])
            f[i] = cmds[i].f
            m[i] = self.pids[i].update(cmds[i], roll, pitch, yaw, state.omq[i], dt)
        return ActuationCommand.full(f, m)


def stack_gains(gains, n, k_h=None):
    """Assemble the stacked feedback matrix K with du = -K z.

    Leader rows stay zero unless an explicit leader-channel gain k_h is
    provided (operator model or the scripted hold PD); follower rows place
    each quad's payload gains and own cable gains at the matching reduced
    coordinates.
    """
    m = 6 + 2 * n
    k = np.zeros((3 * n, 2 * m))
    if k_h is not None:
        k[0:3, :] = np.asarray(k_h, dtype=float)
    for i in range(1, n):
        r = 3 * i
        k[r:r + 3, 3:6] = gains.k_eta0[i]
        k[r:r + 3, m + 3:m + 6] = gains.k_eta0_dot[i]
        c = 6 + 2 * i
        k[r:r + 3, c:c + 2] = gains.k_xi[i]
        k[r:r + 3, m + c:m + c + 2] = gains.k_xi_dot[i]
    return k


def leader_hold_gain_matrix(gains, params):
    """Leader position-hold PD expressed as a feedback row block on z.

    The leader quad position error in reduced coordinates is
    dx0 - hat(rho_1) eta0 - l_1 Qm C' xi_1, so du_1 = -k_h z reproduces the
    PD law with the target frozen at the equilibrium.
    """
    from .geometry import hat

    n = params.n
    m = 6 + 2 * n
    qm = np.array([[0.0, 1.0], [-1.0, 0.0], [0.0, 0.0]])
    kp = np.diag(gains.leader_kp)
    kd = np.diag(gains.leader_kd)
    k_h = np.zeros((3, 2 * m))
    for k_gain, off in ((kp, 0), (kd, m)):
        k_h[:, off + 0:off + 3] = k_gain
        k_h[:, off + 3:off + 6] = -k_gain @ hat(params.rho[0])
        k_h[:, off + 6:off + 8] = -params.lengths[0] * (k_gain @ qm)
    return k_h


def synthesize_gains(params, model, q_att=10.0, q_rate=1.0,
                     stability_margin=0.1, gate=True, **overrides):
    """Default outer-loop gains from a quadratic regulator on the hover model.

    Positions carry zero weight: the regulator is solved on the translation-
    deflated subsystem, restricted to its subspace controllable through the
    follower inputs (the leader channel belongs to the operator). Each
    follower keeps its own payload-attitude and own-cable blocks of the
    regulator gain; cross-cable blocks are dropped to match the per-quad
    feedback structure. The default closed loop (followers plus the leader
    hold PD) is then gated on the controlled-subspace eigenvalues.
    """
    n = model.n
    m = 6 + 2 * n
    idx = _attitude_indices(n)
    a_sub = model.a0[np.ix_(idx, idx)]
    cols = np.arange(3, 3 * n)
    if cols.size == 0:
        raise GainSynthesisError("need at least one follower to synthesize gains")
    b_sub = model.b0[np.ix_(idx, cols)]
    nsub = a_sub.shape[0]
    q_diag = np.empty(nsub)
    q_diag[:nsub // 2] = q_att
    q_diag[nsub // 2:] = q_rate
    q_mat = np.diag(q_diag)

    v = controllable_subspace(a_sub, b_sub)
    a_c = v.T @ a_sub @ v
    b_c = v.T @ b_sub
    q_c = v.T @ q_mat @ v
    q_c = 0.5 * (q_c + q_c.T)
    p = solve_continuous_are(a_c, b_c, q_c, np.eye(b_c.shape[1]))
    k_c = b_c.T @ p
    k_sub = k_c @ v.T

    # embed into full reduced coordinates (zero gain on translation)
    k_full = np.zeros((3 * (n - 1), 2 * m))
    k_full[:, idx] = k_sub

    k_eta0 = np.zeros((n, 3, 3))
    k_eta0_dot = np.zeros((n, 3, 3))
    k_xi = np.zeros((n, 3, 2))
    k_xi_dot = np.zeros((n, 3, 2))
    for i in range(1, n):
        r = 3 * (i - 1)
        k_eta0[i] = k_full[r:r + 3, 3:6]
        k_eta0_dot[i] = k_full[r:r + 3, m + 3:m + 6]
        c = 6 + 2 * i
        k_xi[i] = k_full[r:r + 3, c:c + 2]
        k_xi_dot[i] = k_full[r:r + 3, m + c:m + c + 2]

    gains = ControlGains(k_eta0=k_eta0, k_eta0_dot=k_eta0_dot,
                         k_xi=k_xi, k_xi_dot=k_xi_dot, **overrides)
    if gate:
        k = stack_gains(gains, n, k_h=leader_hold_gain_matrix(gains, params))
        eigs = controlled_subspace_eigs(model, k)
        worst = float(np.max(eigs.real))
        if worst > -stability_margin:
            raise GainSynthesisError(
                f"controlled-subspace eigenvalue real part {worst:.4f} exceeds "
                f"-{stability_margin}")
    return gains
