#!/usr/bin/env python3
"""Benchmark the hot dynamics kernels: numba JIT versus the numpy fallback.

The same benchmark body runs twice in subprocesses, once per kernel path
(selected by the CABLELIFT_NUMBA environment variable), and prints a
microseconds-per-step table for each built-in system size.

Usage: python benchmarks/bench_kernels.py [--steps N]
"""

import argparse
import json
import os
import subprocess
import sys

BODY = r"""
import json, os, time, sys
import numpy as np
from cablelift import _kernels
from cablelift.dynamics import ActuationCommand, step_many, accelerations
from cablelift.linearization import build_equilibrium
from cablelift.scenarios import (rod_2quad_params, single_quad_pendulum_params,
                                 triangle_3quad_params)

steps = int(sys.argv[1])
results = {"numba": _kernels.USING_NUMBA, "cases": {}}
for name, params in (("n=1 pendulum", single_quad_pendulum_params()),
                     ("n=2 rod", rod_2quad_params()),
                     ("n=3 triangle", triangle_3quad_params())):
    eq = build_equilibrium(params)
    cmd = ActuationCommand.reduced(eq.u)
    state = eq.state
    step_many(state, cmd, params, 1e-3, 32)          # warm up / compile
    accelerations(state, cmd, params)
    t0 = time.perf_counter()
    step_many(state, cmd, params, 1e-3, steps)
    dt_step = (time.perf_counter() - t0) / steps
    t0 = time.perf_counter()
    for _ in range(200):
        accelerations(state, cmd, params)
    dt_acc = (time.perf_counter() - t0) / 200
    results["cases"][name] = {"us_per_step": dt_step * 1e6,
                              "us_per_accel": dt_acc * 1e6}
print(json.dumps(results))
"""


def run_path(use_numba, steps):
    env = dict(os.environ)
    env["CABLELIFT_NUMBA"] = "1" if use_numba else "0"
    out = subprocess.run([sys.executable, "-c", BODY, str(steps)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--steps", type=int, default=20000,
                    help="RK4 steps per timing run (default 20000)")
    args = ap.parse_args()

    print(f"timing {args.steps} RK4 steps per case (dt = 1 ms) ...")
    with_numba = run_path(True, args.steps)
    without = run_path(False, args.steps)
    if not with_numba["numba"]:
        print("warning: numba unavailable, both runs used the numpy path")

    header = f"{'case':<16} {'numba us/step':>14} {'numpy us/step':>14} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name in with_numba["cases"]:
        a = with_numba["cases"][name]["us_per_step"]
        b = without["cases"][name]["us_per_step"]
        print(f"{name:<16} {a:>14.1f} {b:>14.1f} {b / a:>7.1f}x")
    print()
    header = f"{'case':<16} {'numba us/rhs':>14} {'numpy us/rhs':>14} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name in with_numba["cases"]:
        a = with_numba["cases"][name]["us_per_accel"]
        b = without["cases"][name]["us_per_accel"]
        print(f"{name:<16} {a:>14.1f} {b:>14.1f} {b / a:>7.1f}x")


if __name__ == "__main__":
    main()
