"""Headless simulation runner with structured logging.

``run`` executes a scenario with the full control stack at the configured
control cadence and returns a RunLog: uniformly sampled time series of the
payload pose, quad poses, cable states, configuration errors, commands,
cable tensions, and energy. Logs write to CSV with full-precision floats
(byte-identical for identical scenario and seed) plus a JSON sidecar with
the scenario hash.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import __version__ as _pkg_version
from .control import (ControlStack, LeaderInput, MeasurementNoise, leader_pd,
                      synthesize_gains)
from .dynamics import NumericalFailure, cable_tensions, energy, quad_position, step_many
from .geometry import E3, config_error_cable, config_error_payload, euler_zyx
from .linearization import build_equilibrium, linearize


class SimulationError(RuntimeError):
    """Dynamics failed mid-run; carries the failure time and last good state."""

    def __init__(self, message, t, state):
        super().__init__(message)
        self.t = t
        self.state = state


def log_columns(n):
    """Ordered column names for a run with n quads."""
    cols = ["t"]
    cols += [f"x0_{a}" for a in "xyz"] + [f"v0_{a}" for a in "xyz"]
    cols += [f"r0_{i}{j}" for i in range(3) for j in range(3)]
    cols += [f"om0_{a}" for a in "xyz"]
    for i in range(n):
        cols += [f"xq{i}_{a}" for a in "xyz"]
        cols += [f"roll{i}", f"pitch{i}", f"yaw{i}"]
    for i in range(n):
        cols += [f"q{i}_{a}" for a in "xyz"] + [f"omc{i}_{a}" for a in "xyz"]
        cols += [f"psi_q{i}", f"tension{i}"]
    cols += ["psi_r0"]
    for i in range(n):
        cols += [f"u{i}_{a}" for a in "xyz"]
        cols += [f"f{i}", f"phid{i}", f"thetad{i}", f"sat{i}"]
    cols += ["phi_h", "theta_h", "f_h", "wp_index", "kinetic", "potential", "energy"]
    return cols


@dataclass
class RunLog:
    columns: list
    rows: np.ndarray
    meta: dict = field(default_factory=dict)

    def __getitem__(self, name):
        return self.rows[:, self.columns.index(name)]

    def stack(self, names):
        idx = [self.columns.index(c) for c in names]
        return self.rows[:, idx]

    @property
    def t(self):
        return self["t"]

    def to_csv(self, path, sidecar=True):
        with open(path, "w") as fh:
            fh.write(",".join(self.columns) + "\n")
            for row in self.rows:
                fh.write(",".join(repr(float(x)) for x in row) + "\n")
        if sidecar:
            with open(str(path) + ".meta.json", "w") as fh:
                json.dump(self.meta, fh, indent=2, sort_keys=True)
                fh.write("\n")

    @classmethod
    def from_csv(cls, path):
        with open(path) as fh:
            columns = fh.readline().strip().split(",")
            rows = np.array([[float(x) for x in line.split(",")] for line in fh])
        meta = {}
        try:
            with open(str(path) + ".meta.json") as fh:
                meta = json.load(fh)
        except FileNotFoundError:
            pass
        return cls(columns=columns, rows=rows, meta=meta)


class WaypointLeader:
    """Steps through payload waypoints on arrival radius plus dwell time."""

    def __init__(self, waypoints, arrival_radius, gains, params, eq):
        self.waypoints = waypoints
        self.arrival_radius = arrival_radius
        self.gains = gains
        self.params = params
        self.eq = eq
        self.index = 0
        self.dwell_left = None

    def tick(self, state, t, dt, noise=None):
        wp = self.waypoints[self.index]
        if self.index < len(self.waypoints) - 1:
            if self.dwell_left is None:
                if np.linalg.norm(state.x0 - wp.pos) < self.arrival_radius:
                    self.dwell_left = wp.dwell
            else:
                self.dwell_left -= dt
                if self.dwell_left <= 0.0:
                    self.index += 1
                    self.dwell_left = None
                    wp = self.waypoints[self.index]
        return leader_pd(state, wp.pos, self.gains, self.params, self.eq, noise=noise)


class ScriptLeader:
    """Replays a time-stamped (t, phi, theta, f) command log, holding the last row."""

    def __init__(self, script):
        self.script = sorted(script, key=lambda r: r[0])
        self.index = 0

    @property
    def index_label(self):
        return self.index

    def tick(self, state, t, dt, noise=None):
        while (self.index + 1 < len(self.script)
               and self.script[self.index + 1][0] <= t + 1e-12):
            self.index += 1
        if not self.script:
            return LeaderInput()
        _, phi, theta, f = self.script[self.index]
        return LeaderInput(phi=phi, theta=theta, f=f)


class HoverLeader:
    """Neutral leader: level attitude at the equilibrium thrust (teleop idle)."""

    def __init__(self, eq):
        self.f_hover = float(eq.f[0])

    def tick(self, state, t, dt, noise=None):
        return LeaderInput(phi=0.0, theta=0.0, f=self.f_hover)


def make_leader(scenario, gains, params, eq):
    if scenario.leader_mode == "waypoints":
        return WaypointLeader(scenario.waypoints, scenario.arrival_radius, gains, params, eq)
    if scenario.leader_mode == "script":
        return ScriptLeader(scenario.script)
    if scenario.leader_mode == "teleop":
        return HoverLeader(eq)
    raise ValueError(f"unknown leader mode {scenario.leader_mode!r}")


def resolve_gains(scenario, model=None):
    """Scenario gains, synthesizing defaults when none are pinned."""
    if scenario.gains is not None:
        return scenario.gains
    n = scenario.params.n
    if n == 1:
        # no followers: only the leader PD and inner PID defaults apply
        from .control import ControlGains

        return ControlGains(k_eta0=np.zeros((1, 3, 3)), k_eta0_dot=np.zeros((1, 3, 3)),
                            k_xi=np.zeros((1, 3, 2)), k_xi_dot=np.zeros((1, 3, 2)))
    eq = build_equilibrium(scenario.params)
    if model is None:
        model = linearize(scenario.params, eq)
    return synthesize_gains(scenario.params, model)


def run(scenario, state0=None, on_tick=None):
    """Simulate a scenario and return its RunLog.

    Deterministic for a given scenario and seed. Dynamics failures raise
    SimulationError carrying the failure time and the last good state.
    """
    params = scenario.params
    n = params.n
    eq = build_equilibrium(params)
    gains = resolve_gains(scenario)
    stack = ControlStack(params, gains, eq, mode=scenario.mode,
                         pac_cac_enabled=scenario.pac_cac_enabled)
    leader = make_leader(scenario, gains, params, eq)
    noise = None
    if scenario.noise:
        rng = np.random.default_rng(scenario.seed)
        noise = MeasurementNoise(rng=rng, **scenario.noise)

    state = scenario.initial_state() if state0 is None else state0.copy()
    dt = scenario.dt
    steps = scenario.steps_per_tick
    tick_dt = steps * dt
    n_ticks = round(scenario.duration / tick_dt)
    columns = log_columns(n)
    rows = []

    t = 0.0
    for tick in range(n_ticks + 1):
        li = leader.tick(state, t, tick_dt, noise=noise)
        cmd = stack.tick(state, li, tick_dt, noise=noise)
        if tick % scenario.ticks_per_log == 0 or tick == n_ticks:
            rows.append(_log_row(state, cmd, li, leader, stack, params, t))
        if tick == n_ticks:
            break
        if on_tick is not None:
            on_tick(tick, t, state)
        try:
            state = step_many(state, cmd, params, dt, steps)
        except NumericalFailure as exc:
            raise SimulationError(f"dynamics failed at t={t:.3f} s: {exc}", t, state) from exc
        t = (tick + 1) * tick_dt

    meta = {
        "scenario": scenario.name,
        "scenario_hash": scenario.content_hash(),
        "seed": scenario.seed,
        "version": _pkg_version,
        "n": n,
        "columns": columns,
        "units": "SI (m, s, rad, N, J); r0/q unitless",
    }
    return RunLog(columns=columns, rows=np.array(rows), meta=meta)


def _log_row(state, cmd, li, leader, stack, params, t):
    from .dynamics import accelerations, thrust_vectors

    der = accelerations(state, cmd, params)
    tensions = cable_tensions(state, cmd, params, der)
    u = thrust_vectors(state, cmd, params)
    kin, pot = energy(state, params)
    row = [t]
    row += list(state.x0) + list(state.v0) + list(state.r0.reshape(9)) + list(state.om0)
    for i in range(params.n):
        row += list(quad_position(state, params, i))
        row += list(euler_zyx(state.rq[i]))
    for i in range(params.n):
        row += list(state.q[i]) + list(state.om[i])
        row += [config_error_cable(-E3, state.q[i]), tensions[i]]
    row += [config_error_payload(np.eye(3), state.r0)]
    for i in range(params.n):
        fc = stack.last_follower_cmds[i]
        row += list(u[i])
        row += [fc.f, fc.phi_d, fc.theta_d, 1.0 if fc.saturated else 0.0]
    wp = float(getattr(leader, "index", -1))
    row += [li.phi, li.theta, li.f, wp, kin, pot, kin + pot]
    return row
