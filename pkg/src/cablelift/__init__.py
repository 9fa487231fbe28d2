"""Simulation and control of quadcopter teams carrying a cable-suspended payload."""

__version__ = "0.1.0"

from .dynamics import (ActuationCommand, Derivatives, SystemParams, SystemState,
                       accelerations, energy, quad_position, step, step_many)
from .geometry import (config_error_cable, config_error_payload, exp_so3, hat,
                       log_so3, s2_error, so3_error, vee)
from .linearization import (HoverEquilibrium, LinearModel, build_equilibrium,
                            closed_loop, full_to_reduced, linearize,
                            reduced_to_full)
from .control import (ControlGains, FollowerCommand, LeaderInput, allocate, cac,
                      follower_outer_loop, leader_pd, pac, synthesize_gains)
from .scenarios import Scenario, builtin_scenarios, load_scenario
from .harness import RunLog, run

__all__ = [
    "ActuationCommand", "ControlGains", "Derivatives", "FollowerCommand",
    "HoverEquilibrium", "LeaderInput", "LinearModel", "RunLog", "Scenario",
    "SystemParams", "SystemState", "accelerations", "allocate",
    "build_equilibrium", "builtin_scenarios", "cac", "closed_loop",
    "config_error_cable", "config_error_payload", "energy", "exp_so3",
    "follower_outer_loop", "full_to_reduced", "hat", "leader_pd", "linearize",
    "load_scenario", "log_so3", "pac", "quad_position", "reduced_to_full",
    "run", "s2_error", "so3_error", "step", "step_many", "synthesize_gains",
    "vee",
]
