"""Real-time teleoperation service: one simulation loop, WebSocket clients.

A single thread owns the simulation and advances it in fixed control ticks
(default 100 Hz, ten 1 ms physics steps per tick). Network ingress and
egress never touch simulation state directly: inbound commands go through a
mailbox and are applied at the next tick boundary (latest arrival wins), and
state snapshots are broadcast at the stream cadence through per-client
queues. Disconnecting (or never connecting) leaves the leader on a failsafe
ramp back to hover.

Wire protocol (JSON text frames on ``/ws``):
  inbound  {"type": "cmd", "seq": int, "t_ms": int, "phi": float,
            "theta": float, "thrust": float in [0, 1],
            optional "arm"/"disarm"/"reset": bool}
  outbound {"type": "state", ...snapshot...} and
           {"type": "err", "code": str, "detail": str}

Normalized thrust maps linearly onto [0, 2] times the leader hover thrust,
so 0.5 commands hover.
"""

from __future__ import annotations

import asyncio
import json
import queue
import threading
import time
from dataclasses import dataclass

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .control import ControlStack, LeaderInput
from .dynamics import step_many
from .geometry import E3, config_error_cable, config_error_payload
from .harness import resolve_gains
from .linearization import build_equilibrium


class CommandError(ValueError):
    def __init__(self, code, detail):
        super().__init__(detail)
        self.code = code
        self.detail = detail


@dataclass
class CommandMessage:
    seq: int
    t_ms: int
    phi: float
    theta: float
    thrust: float          # normalized [0, 1]
    arm: bool = False
    disarm: bool = False
    reset: bool = False


def parse_command(data, angle_bound):
    """Validate a decoded command frame; raises CommandError on bad input."""
    if not isinstance(data, dict) or data.get("type") != "cmd":
        raise CommandError("bad_frame", "expected a frame with type 'cmd'")
    try:
        seq = int(data["seq"])
        t_ms = int(data.get("t_ms", 0))
        phi = float(data["phi"])
        theta = float(data["theta"])
        thrust = float(data["thrust"])
    except (KeyError, TypeError, ValueError) as exc:
        raise CommandError("bad_frame", f"malformed command: {exc}") from exc
    if not (np.isfinite(phi) and np.isfinite(theta) and np.isfinite(thrust)):
        raise CommandError("out_of_range", "non-finite command value")
    if abs(phi) > angle_bound or abs(theta) > angle_bound:
        raise CommandError("out_of_range",
                           f"roll/pitch must be within +-{angle_bound} rad")
    if not (0.0 <= thrust <= 1.0):
        raise CommandError("out_of_range", "thrust must be within [0, 1]")
    return CommandMessage(seq=seq, t_ms=t_ms, phi=phi, theta=theta, thrust=thrust,
                          arm=bool(data.get("arm", False)),
                          disarm=bool(data.get("disarm", False)),
                          reset=bool(data.get("reset", False)))


class SimLoop:
    """Fixed-step real-time simulation loop with mailbox command ingestion."""

    def __init__(self, scenario, stream_hz=50.0, record_path=None, paced=True,
                 failsafe_s=0.5):
        if scenario.leader_mode != "teleop":
            raise ValueError("teleop service needs a scenario with a teleop leader")
        self.scenario = scenario
        self.params = scenario.params
        self.eq = build_equilibrium(self.params)
        self.gains = resolve_gains(scenario)
        self.stack = ControlStack(self.params, self.gains, self.eq, mode=scenario.mode,
                                  pac_cac_enabled=scenario.pac_cac_enabled)
        self.state = scenario.initial_state()
        self.tick_dt = 1.0 / scenario.control_hz
        self.steps_per_tick = scenario.steps_per_tick
        ratio = scenario.control_hz / stream_hz
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ValueError("stream rate must divide the control rate")
        self.ticks_per_snapshot = round(ratio)
        self.stream_hz = stream_hz
        self.failsafe_ticks = max(1, round(failsafe_s / self.tick_dt))

        self.f_hover = float(self.eq.f[0])
        self.thrust_span = 2.0 * self.f_hover
        self.leader_input = LeaderInput(0.0, 0.0, self.f_hover)
        self.armed = True

        self.tick = 0
        self.mailbox = queue.Queue()
        self.subscribers = {}
        self._sub_lock = threading.Lock()
        self._sub_counter = 0
        self.client_count = 0
        self.last_applied_seq = -1
        self._failsafe_from = None     # (start_tick, LeaderInput at start)
        self.overruns = 0
        self.ticks_run = 0
        self.paced = paced
        self.record_path = record_path
        self._record_fh = None
        self._stop = threading.Event()
        self._thread = None

    # -- subscriber management (called from network handlers) --------------

    def subscribe(self, push):
        """Register a snapshot callback; returns an unsubscribe token."""
        with self._sub_lock:
            token = self._sub_counter
            self._sub_counter += 1
            self.subscribers[token] = push
        return token

    def unsubscribe(self, token):
        with self._sub_lock:
            self.subscribers.pop(token, None)

    def client_connected(self):
        with self._sub_lock:
            self.client_count += 1
            self._failsafe_from = None

    def client_disconnected(self):
        with self._sub_lock:
            self.client_count -= 1
            if self.client_count <= 0:
                self.mailbox.put(("failsafe", None))

    def submit(self, cmd):
        """Queue a validated command for the next control tick."""
        self.mailbox.put(("cmd", cmd))

    # -- simulation loop ----------------------------------------------------

    def _input_from(self, cmd):
        return LeaderInput(phi=cmd.phi, theta=cmd.theta,
                           f=cmd.thrust * self.thrust_span)

    def _apply_mailbox(self):
        latest = None
        while True:
            try:
                kind, payload = self.mailbox.get_nowait()
            except queue.Empty:
                break
            if kind == "failsafe":
                self._failsafe_from = (self.tick, LeaderInput(
                    self.leader_input.phi, self.leader_input.theta, self.leader_input.f))
                latest = None
            elif kind == "cmd":
                latest = payload
        if latest is not None:
            if latest.reset:
                self.state = self.scenario.initial_state()
                self.stack.reset()
            if latest.disarm:
                self.armed = False
            if latest.arm:
                self.armed = True
            self._failsafe_from = None
            self.leader_input = self._input_from(latest)
            self.last_applied_seq = latest.seq
            self._record({"kind": "cmd", "tick": self.tick, "seq": latest.seq,
                          "phi": latest.phi, "theta": latest.theta,
                          "thrust": latest.thrust})

    def _effective_input(self):
        if not self.armed:
            return LeaderInput(0.0, 0.0, self.f_hover)
        if self._failsafe_from is not None:
            start_tick, start = self._failsafe_from
            frac = min(1.0, (self.tick - start_tick) / self.failsafe_ticks)
            return LeaderInput(
                phi=start.phi * (1.0 - frac),
                theta=start.theta * (1.0 - frac),
                f=start.f + (self.f_hover - start.f) * frac)
        return self.leader_input

    def run_tick(self):
        """Apply pending commands, advance one control period, maybe snapshot."""
        self._apply_mailbox()
        li = self._effective_input()
        cmd = self.stack.tick(self.state, li, self.tick_dt)
        self.state = step_many(self.state, cmd, self.params, self.scenario.dt,
                               self.steps_per_tick)
        self.tick += 1
        self.ticks_run += 1
        if self.tick % self.ticks_per_snapshot == 0:
            snap = self.snapshot(li)
            self._record({"kind": "state", **snap})
            with self._sub_lock:
                pushes = list(self.subscribers.values())
            for push in pushes:
                push(snap)

    def snapshot(self, applied_input=None):
        li = self.leader_input if applied_input is None else applied_input
        n = self.params.n
        st = self.state
        from .dynamics import quad_position

        return {
            "type": "state",
            "tick": self.tick,
            "t": self.tick * self.tick_dt,
            "x0": list(st.x0),
            "r0": list(st.r0.reshape(9)),
            "quads": [{"x": list(quad_position(st, self.params, i)),
                       "r": list(st.rq[i].reshape(9))} for i in range(n)],
            "q": [list(st.q[i]) for i in range(n)],
            "psi_q": [config_error_cable(-E3, st.q[i]) for i in range(n)],
            "psi_r0": config_error_payload(np.eye(3), st.r0),
            "leader_input": {"phi": li.phi, "theta": li.theta, "f": li.f},
            "sat": [bool(c.saturated) for c in self.stack.last_follower_cmds],
            "seq": self.last_applied_seq,
            "armed": self.armed,
            "failsafe": self._failsafe_from is not None,
        }

    def _record(self, row):
        if self._record_fh is not None:
            self._record_fh.write(json.dumps(row) + "\n")

    def start(self):
        if self.record_path:
            self._record_fh = open(self.record_path, "w")
            self._record({"kind": "meta", "scenario": self.scenario.name,
                          "scenario_hash": self.scenario.content_hash(),
                          "control_hz": self.scenario.control_hz,
                          "stream_hz": self.stream_hz})
        self._stop.clear()
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._thread.start()

    def stop(self):
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5.0)
            self._thread = None
        if self._record_fh is not None:
            self._record_fh.close()
            self._record_fh = None

    def _run(self):
        next_deadline = time.monotonic() + self.tick_dt
        while not self._stop.is_set():
            self.run_tick()
            if not self.paced:
                continue
            now = time.monotonic()
            if now > next_deadline:
                # behind schedule: run extra ticks immediately, never drop
                self.overruns += 1
            else:
                time.sleep(next_deadline - now)
            next_deadline += self.tick_dt


def make_app(loop, ui_dir=None):
    """FastAPI application exposing the loop on /ws (plus optional static UI)."""
    app = FastAPI(title="cablelift teleop")
    app.state.simloop = loop

    @app.get("/health")
    def health():
        return {"status": "ok", "tick": loop.tick, "overruns": loop.overruns,
                "clients": loop.client_count}

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        aloop = asyncio.get_running_loop()
        out_q = asyncio.Queue(maxsize=8)

        def push(snap):
            def _put():
                if out_q.full():
                    out_q.get_nowait()     # drop oldest frame, keep stream fresh
                out_q.put_nowait(snap)
            aloop.call_soon_threadsafe(_put)

        token = loop.subscribe(push)
        loop.client_connected()
        last_seq = -1

        async def writer():
            while True:
                snap = await out_q.get()
                await ws.send_text(json.dumps(snap))

        writer_task = asyncio.create_task(writer())
        try:
            while True:
                text = await ws.receive_text()
                try:
                    data = json.loads(text)
                except json.JSONDecodeError as exc:
                    await ws.send_text(json.dumps(
                        {"type": "err", "code": "bad_frame", "detail": str(exc)}))
                    continue
                try:
                    cmd = parse_command(data, loop.gains.angle_bound)
                    if cmd.seq <= last_seq:
                        raise CommandError("stale_seq",
                                           f"sequence {cmd.seq} not above {last_seq}")
                except CommandError as exc:
                    await ws.send_text(json.dumps(
                        {"type": "err", "code": exc.code, "detail": exc.detail}))
                    continue
                last_seq = cmd.seq
                loop.submit(cmd)
        except WebSocketDisconnect:
            pass
        finally:
            writer_task.cancel()
            loop.unsubscribe(token)
            loop.client_disconnected()

    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    return app


def load_record(path):
    """Rows of a recorded session (meta, cmd, and state frames)."""
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


def replay_scenario(scenario, records):
    """Scenario whose leader replays the recorded command log tick-exactly."""
    import dataclasses

    tick_dt = 1.0 / scenario.control_hz
    script = [(row["tick"] * tick_dt, row["phi"], row["theta"],
               row["thrust"] * 2.0 * _hover_thrust(scenario))
              for row in records if row.get("kind") == "cmd"]
    if not script or script[0][0] > 0.0:
        script.insert(0, (0.0, 0.0, 0.0, _hover_thrust(scenario)))
    return dataclasses.replace(scenario, leader_mode="script", script=script,
                               waypoints=[])


def _hover_thrust(scenario):
    p = scenario.params
    return float((p.masses[0] + p.m0 / p.n) * p.g)
