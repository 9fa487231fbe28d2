"""Command-line interface.

Exit codes: 0 success, 1 scenario or usage error, 2 numeric failure during
simulation or analysis. Errors print a single JSON object on stderr so
batch tooling can parse them.
"""

from __future__ import annotations

import json
import sys

import click
import numpy as np

from .control import leader_hold_gain_matrix, stack_gains, synthesize_gains
from .dynamics import DegenerateGeometryError, NumericalFailure
from .harness import SimulationError, resolve_gains
from .harness import run as run_scenario
from .linearization import (build_equilibrium, controlled_subspace_eigs,
                            linearize, save_linear_model)
from .scenarios import ScenarioError, builtin_scenarios, load_scenario

SCENARIO_EXIT = 1
NUMERIC_EXIT = 2


def _fail(code, kind, detail):
    sys.stderr.write(json.dumps({"error": kind, "detail": str(detail)}) + "\n")
    sys.exit(code)


def _load(ref):
    try:
        return load_scenario(ref)
    except ScenarioError as exc:
        _fail(SCENARIO_EXIT, "scenario", exc)


@click.group()
def main():
    """Simulate and analyze cable-suspended payload transport by quad teams."""


@main.command("run")
@click.argument("scenario")
@click.option("--out", type=click.Path(), default=None, help="CSV log path.")
def run_cmd(scenario, out):
    """Run a scenario headless and write its log."""
    sc = _load(scenario)
    try:
        log = run_scenario(sc)
    except (SimulationError, NumericalFailure, DegenerateGeometryError) as exc:
        _fail(NUMERIC_EXIT, "numeric", exc)
    if out is None:
        out = f"{sc.name}.csv"
    log.to_csv(out)
    click.echo(f"wrote {len(log.rows)} samples to {out}")


@main.group("scenarios")
def scenarios_group():
    """Inspect scenarios."""


@scenarios_group.command("list")
def scenarios_list():
    """List built-in scenarios."""
    for name, sc in sorted(builtin_scenarios().items()):
        p = sc.params
        click.echo(f"{name}: n={p.n}, m0={p.m0} kg, leader={sc.leader_mode}, "
                   f"duration={sc.duration} s")


@scenarios_group.command("show")
@click.argument("scenario")
def scenarios_show(scenario):
    """Print a scenario as JSON (usable as a scenario file)."""
    sc = _load(scenario)
    click.echo(sc.to_json())


@main.command("linearize")
@click.argument("scenario")
@click.option("--out", type=click.Path(), default=None,
              help="Write the linear model in the plain-text matrix format.")
def linearize_cmd(scenario, out):
    """Linearize about hover and print the state-space summary."""
    sc = _load(scenario)
    try:
        eq = build_equilibrium(sc.params)
        model = linearize(sc.params, eq)
    except Exception as exc:
        _fail(NUMERIC_EXIT, "numeric", exc)
    eigs = np.linalg.eigvals(model.a0)
    click.echo(f"n={model.n} quads; A0 is {model.a0.shape[0]}x{model.a0.shape[1]}, "
               f"B0 is {model.b0.shape[0]}x{model.b0.shape[1]}")
    click.echo(f"hover thrusts: {np.array2string(eq.f, precision=5)} N")
    worst = np.max(eigs.real)
    click.echo(f"open-loop spectrum: max Re = {worst:.2e}, "
               f"|Im| range [{np.min(np.abs(eigs.imag)):.3f}, {np.max(np.abs(eigs.imag)):.3f}] rad/s")
    if out:
        save_linear_model(model, out)
        click.echo(f"wrote linear model to {out}")


@main.group("gains")
def gains_group():
    """Gain synthesis."""


@gains_group.command("synth")
@click.argument("scenario")
@click.option("--out", type=click.Path(), default=None,
              help="Write a scenario JSON with the synthesized gains pinned.")
def gains_synth(scenario, out):
    """Synthesize default follower gains and report closed-loop margins."""
    sc = _load(scenario)
    try:
        eq = build_equilibrium(sc.params)
        model = linearize(sc.params, eq)
        gains = synthesize_gains(sc.params, model)
        k = stack_gains(gains, sc.params.n,
                        k_h=leader_hold_gain_matrix(gains, sc.params))
        eigs = controlled_subspace_eigs(model, k)
    except Exception as exc:
        _fail(NUMERIC_EXIT, "numeric", exc)
    click.echo(f"controlled-subspace eigenvalues: {len(eigs)}; "
               f"max Re = {np.max(eigs.real):.4f}")
    if out:
        import dataclasses

        dataclasses.replace(sc, gains=gains).to_json(out)
        click.echo(f"wrote scenario with pinned gains to {out}")
    else:
        click.echo(json.dumps(gains.to_dict(), indent=2, sort_keys=True))


@main.command("serve")
@click.argument("scenario")
@click.option("--port", type=int, default=8000)
@click.option("--host", default="127.0.0.1")
@click.option("--stream-hz", type=float, default=50.0)
@click.option("--record", "record_path", type=click.Path(), default=None,
              help="Record applied commands and snapshots to a JSONL file.")
@click.option("--ui", "ui_dir", type=click.Path(exists=True), default=None,
              help="Serve a static cockpit build from this directory.")
def serve_cmd(scenario, port, host, stream_hz, record_path, ui_dir):
    """Serve the real-time teleoperation loop over WebSocket."""
    import uvicorn

    from .teleop import SimLoop, make_app

    sc = _load(scenario)
    if sc.leader_mode != "teleop":
        import dataclasses

        sc = dataclasses.replace(sc, leader_mode="teleop", waypoints=[])
    try:
        loop = SimLoop(sc, stream_hz=stream_hz, record_path=record_path)
    except Exception as exc:
        _fail(NUMERIC_EXIT, "numeric", exc)
    loop.start()
    click.echo(f"teleop loop running: scenario={sc.name}, ws://{host}:{port}/ws")
    try:
        uvicorn.run(make_app(loop, ui_dir=ui_dir), host=host, port=port,
                    log_level="warning")
    finally:
        loop.stop()


if __name__ == "__main__":
    main()
