"""Scenario definitions: system parameters, initial conditions, leader policy.

Scenarios serialize to versioned JSON (schema below); unknown keys are
rejected so a typo fails loudly instead of silently using defaults. Built-in
scenarios cover a two-quad rod payload, a three-quad equilateral-triangle
payload, and a single-quad pendulum used for oracle comparisons.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
from jsonschema import Draft202012Validator

from .control import ControlGains
from .dynamics import SystemParams, SystemState
from .geometry import E3

SCHEMA_VERSION = 1

_VEC3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}
_MAT3 = {"type": "array", "items": _VEC3, "minItems": 3, "maxItems": 3}

SCENARIO_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["schema_version", "name", "params", "initial", "leader", "duration"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "name": {"type": "string", "minLength": 1},
        "params": {
            "type": "object",
            "additionalProperties": False,
            "required": ["m0", "j0", "quads"],
            "properties": {
                "m0": {"type": "number", "exclusiveMinimum": 0},
                "j0": {"oneOf": [_VEC3, _MAT3]},
                "g": {"type": "number"},
                "quads": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["mass", "length", "rho"],
                        "properties": {
                            "mass": {"type": "number", "exclusiveMinimum": 0},
                            "length": {"type": "number", "exclusiveMinimum": 0},
                            "rho": _VEC3,
                            "j": {"oneOf": [_VEC3, _MAT3]},
                        },
                    },
                },
            },
        },
        "initial": {
            "type": "object",
            "additionalProperties": False,
            "required": ["preset"],
            "properties": {
                "preset": {"enum": ["hover", "tilted-cables", "offset-payload"]},
                "x0": _VEC3,
                "angle_deg": {"type": "number"},
                "azimuth_deg": {"type": "number"},
                "offset": _VEC3,
            },
        },
        "leader": {
            "type": "object",
            "additionalProperties": False,
            "required": ["mode"],
            "properties": {
                "mode": {"enum": ["teleop", "waypoints", "script"]},
                "waypoints": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["pos"],
                        "properties": {
                            "pos": _VEC3,
                            "dwell": {"type": "number", "minimum": 0},
                        },
                    },
                },
                "arrival_radius": {"type": "number", "exclusiveMinimum": 0},
                "commands": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["t", "phi", "theta", "f"],
                        "properties": {
                            "t": {"type": "number", "minimum": 0},
                            "phi": {"type": "number"},
                            "theta": {"type": "number"},
                            "f": {"type": "number", "minimum": 0},
                        },
                    },
                },
            },
        },
        "gains": {"type": ["object", "null"]},
        "mode": {"enum": ["reduced", "full"]},
        "dt": {"type": "number", "exclusiveMinimum": 0, "maximum": 0.01},
        "duration": {"type": "number", "exclusiveMinimum": 0},
        "control_hz": {"type": "number", "exclusiveMinimum": 0},
        "log_hz": {"type": "number", "exclusiveMinimum": 0},
        "seed": {"type": "integer"},
        "noise": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "sigma_att": {"type": "number", "minimum": 0},
                "sigma_rate": {"type": "number", "minimum": 0},
                "sigma_cable": {"type": "number", "minimum": 0},
                "sigma_cable_rate": {"type": "number", "minimum": 0},
            },
        },
        "pac_cac_enabled": {"type": "boolean"},
    },
}

_VALIDATOR = Draft202012Validator(SCENARIO_SCHEMA)


class ScenarioError(ValueError):
    """Scenario file failed validation."""


@dataclass
class Waypoint:
    pos: np.ndarray
    dwell: float = 2.0


@dataclass
class Scenario:
    name: str
    params: SystemParams
    initial: dict
    leader_mode: str                       # teleop | waypoints | script
    waypoints: list = field(default_factory=list)
    arrival_radius: float = 0.1
    script: list = field(default_factory=list)   # rows (t, phi, theta, f)
    gains: ControlGains = None             # None = synthesize at run time
    mode: str = "full"
    dt: float = 1e-3
    duration: float = 10.0
    control_hz: float = 100.0
    log_hz: float = 100.0
    seed: int = 0
    noise: dict = None
    pac_cac_enabled: bool = True

    def __post_init__(self):
        steps = (1.0 / self.control_hz) / self.dt
        if abs(steps - round(steps)) > 1e-9 or round(steps) < 1:
            raise ScenarioError("dt must divide the control period")
        ticks = self.control_hz / self.log_hz
        if abs(ticks - round(ticks)) > 1e-9 or round(ticks) < 1:
            raise ScenarioError("log cadence must be a multiple of the control period")
        if self.duration <= 0:
            raise ScenarioError("duration must be positive")
        if self.leader_mode == "waypoints" and not self.waypoints:
            raise ScenarioError("waypoint leader needs a waypoint list")

    @property
    def steps_per_tick(self):
        return round((1.0 / self.control_hz) / self.dt)

    @property
    def ticks_per_log(self):
        return round(self.control_hz / self.log_hz)

    def initial_state(self):
        return build_initial_state(self.params, self.initial)

    def to_dict(self):
        p = self.params
        d = {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "params": {
                "m0": p.m0,
                "j0": p.j0.tolist(),
                "g": p.g,
                "quads": [
                    {"mass": float(p.masses[i]), "length": float(p.lengths[i]),
                     "rho": p.rho[i].tolist(), "j": p.jq[i].tolist()}
                    for i in range(p.n)
                ],
            },
            "initial": dict(self.initial),
            "leader": {"mode": self.leader_mode},
            "mode": self.mode,
            "dt": self.dt,
            "duration": self.duration,
            "control_hz": self.control_hz,
            "log_hz": self.log_hz,
            "seed": self.seed,
            "gains": None if self.gains is None else self.gains.to_dict(),
            "pac_cac_enabled": self.pac_cac_enabled,
        }
        if self.leader_mode == "waypoints":
            d["leader"]["waypoints"] = [
                {"pos": np.asarray(w.pos).tolist(), "dwell": w.dwell} for w in self.waypoints]
            d["leader"]["arrival_radius"] = self.arrival_radius
        if self.leader_mode == "script":
            d["leader"]["commands"] = [
                {"t": float(t), "phi": float(ph), "theta": float(th), "f": float(f)}
                for (t, ph, th, f) in self.script]
        if self.noise:
            d["noise"] = dict(self.noise)
        return d

    @classmethod
    def from_dict(cls, d):
        errors = sorted(_VALIDATOR.iter_errors(d), key=lambda e: e.json_path)
        if errors:
            msgs = "; ".join(f"{e.json_path}: {e.message}" for e in errors[:5])
            raise ScenarioError(f"invalid scenario: {msgs}")
        pd = d["params"]
        j0 = np.asarray(pd["j0"], dtype=float)
        if j0.ndim == 1:
            j0 = np.diag(j0)
        quads = pd["quads"]
        jq = []
        for qd in quads:
            j = np.asarray(qd.get("j", [3e-5, 3e-5, 5e-5]), dtype=float)
            jq.append(np.diag(j) if j.ndim == 1 else j)
        params = SystemParams(
            m0=pd["m0"], j0=j0,
            masses=[q["mass"] for q in quads],
            lengths=[q["length"] for q in quads],
            rho=[q["rho"] for q in quads],
            jq=np.array(jq), g=pd.get("g", 9.81))
        leader = d["leader"]
        waypoints = [Waypoint(pos=np.asarray(w["pos"], dtype=float), dwell=w.get("dwell", 2.0))
                     for w in leader.get("waypoints", [])]
        script = [(c["t"], c["phi"], c["theta"], c["f"]) for c in leader.get("commands", [])]
        gains = None if d.get("gains") is None else ControlGains.from_dict(d["gains"])
        return cls(
            name=d["name"], params=params, initial=dict(d["initial"]),
            leader_mode=leader["mode"], waypoints=waypoints,
            arrival_radius=leader.get("arrival_radius", 0.1), script=script,
            gains=gains, mode=d.get("mode", "full"), dt=d.get("dt", 1e-3),
            duration=d["duration"], control_hz=d.get("control_hz", 100.0),
            log_hz=d.get("log_hz", 100.0), seed=d.get("seed", 0),
            noise=d.get("noise"), pac_cac_enabled=d.get("pac_cac_enabled", True))

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            try:
                d = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ScenarioError(f"not valid JSON: {exc}") from exc
        return cls.from_dict(d)

    def content_hash(self):
        text = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def build_initial_state(params, init):
    """Initial SystemState from a named preset."""
    n = params.n
    x0 = np.asarray(init.get("x0", [0.0, 0.0, 0.0]), dtype=float)
    preset = init["preset"]
    q = np.tile(-E3, (n, 1))
    if preset == "hover":
        pass
    elif preset == "tilted-cables":
        ang = np.deg2rad(init.get("angle_deg", 10.0))
        azi = np.deg2rad(init.get("azimuth_deg", 0.0))
        direction = np.array([np.cos(azi), np.sin(azi), 0.0])
        q = np.tile(np.sin(ang) * direction - np.cos(ang) * E3, (n, 1))
    elif preset == "offset-payload":
        x0 = x0 + np.asarray(init.get("offset", [0.3, 0.0, 0.0]), dtype=float)
    else:
        raise ScenarioError(f"unknown initial preset {preset!r}")
    return SystemState(x0, np.zeros(3), np.eye(3), np.zeros(3), q, np.zeros((n, 3)))


def rod_2quad_params():
    """Two quads at the ends of a 60 cm, 24 g slender strip, 50 cm cables."""
    length, width, height = 0.6, 0.015, 0.003
    m0 = 0.024
    j0 = np.diag([m0 * (width ** 2 + height ** 2) / 12,
                  m0 * length ** 2 / 12,
                  m0 * length ** 2 / 12])
    return SystemParams(m0=m0, j0=j0, masses=[0.052, 0.052], lengths=[0.5, 0.5],
                        rho=[[length / 2, 0.0, 0.0], [-length / 2, 0.0, 0.0]])


def triangle_3quad_params():
    """Three quads at the vertices of a 60 cm equilateral, 23 g lamina."""
    side = 0.6
    m0 = 0.023
    r_c = side / np.sqrt(3.0)
    angles = (np.pi / 2, np.pi / 2 + 2 * np.pi / 3, np.pi / 2 + 4 * np.pi / 3)
    rho = [[r_c * np.cos(a), r_c * np.sin(a), 0.0] for a in angles]
    # uniform triangular lamina about its centroid
    j0 = m0 * side ** 2 / 24.0 * np.diag([1.0, 1.0, 2.0])
    return SystemParams(m0=m0, j0=j0, masses=[0.052] * 3, lengths=[0.5] * 3, rho=rho)


def single_quad_pendulum_params():
    """One quad with a point-like payload on a 50 cm cable (oracle scenario)."""
    return SystemParams(m0=0.024, j0=np.eye(3) * 1e-6, masses=[0.052],
                        lengths=[0.5], rho=[[0.0, 0.0, 0.0]])


def square_waypoints(altitude=1.0, half=1.0, dwell=2.0):
    """Square path centered on the origin at the given altitude."""
    corners = [(-half, -half), (half, -half), (half, half), (-half, half), (-half, -half)]
    return [Waypoint(pos=np.array([x, y, altitude]), dwell=dwell) for x, y in corners]


def builtin_scenarios():
    """Named built-in scenarios, freshly constructed on every call."""
    square = square_waypoints()
    start = {"preset": "hover", "x0": [-1.0, -1.0, 1.0]}
    scenarios = {
        "hover": Scenario(
            name="hover", params=rod_2quad_params(),
            initial={"preset": "hover"}, leader_mode="waypoints",
            waypoints=[Waypoint(pos=np.zeros(3), dwell=1e9)],
            duration=10.0),
        "rod-2quad": Scenario(
            name="rod-2quad", params=rod_2quad_params(),
            initial=start, leader_mode="waypoints",
            waypoints=square, duration=40.0),
        "triangle-3quad": Scenario(
            name="triangle-3quad", params=triangle_3quad_params(),
            initial=start, leader_mode="waypoints",
            waypoints=square, duration=40.0),
        "single-quad-pendulum": Scenario(
            name="single-quad-pendulum", params=single_quad_pendulum_params(),
            initial={"preset": "tilted-cables", "angle_deg": 10.0},
            leader_mode="waypoints",
            waypoints=[Waypoint(pos=np.zeros(3), dwell=1e9)],
            duration=5.0),
    }
    return scenarios


def load_scenario(ref):
    """Scenario from a file path or a built-in name."""
    import os

    if os.path.exists(ref):
        return Scenario.from_json(ref)
    builtins_ = builtin_scenarios()
    if ref in builtins_:
        return builtins_[ref]
    raise ScenarioError(f"no scenario file or built-in named {ref!r}; "
                        f"built-ins: {', '.join(sorted(builtins_))}")
