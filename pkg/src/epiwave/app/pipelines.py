"""One pipeline per CLI command, shared plumbing for artifact text.

Every pipeline is a pure function from a validated ScenarioConfig to
(artifacts, results): artifacts maps file names to their full text,
results is the headline summary echoed into the run manifest.  Nothing
here touches the filesystem, so a failed run never leaves partial
output behind.

Float formatting is fixed at 17 significant digits with a '.' decimal
point; together with the deterministic solvers this makes artifact
bytes a pure function of the config document.
"""

from __future__ import annotations

import io
import json

import numpy as np

from .. import dynamics, spectral, steady, waves
from ..domain.kernels import time_integrate_kernel
from ..errors import ValidationError
from ..sir import equivalence_check, simulate_sir
from .scenario import ScenarioConfig


def _fmt(value) -> str:
    return f"{float(value):.17g}"


def _csv(header, rows) -> str:
    out = io.StringIO()
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join(_fmt(v) for v in row) + "\n")
    return out.getvalue()


def _json_text(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _node_columns(grid):
    return ["x"] if grid.dim == 1 else ["x1", "x2"]


def _time_stride(n_frames: int, cap: int = 41) -> int:
    return max(1, -(-n_frames // cap))


def _objects(cfg: ScenarioConfig):
    return cfg.build_grid(), cfg.build_kernel(), cfg.build_response()


def run_threshold(cfg: ScenarioConfig):
    grid, kernel, response = _objects(cfg)
    transfer = time_integrate_kernel(kernel, grid)
    pair = spectral.principal_eigenpair(
        spectral.assemble_periodic(transfer, response), tol=cfg.tol)
    sweep = spectral.ball_eigenvalue_sweep(transfer, response, tol=cfg.tol)
    outcome = (dynamics.Outcome.PROPAGATES if pair.value > 1.0
               else dynamics.Outcome.FADES_OUT)
    summary = {
        "lambda1": pair.value,
        "outcome": outcome.value,
        "residual": pair.residual,
        "iterations": pair.iterations,
        "sweep_gap": pair.value - sweep[-1].value,
    }
    artifacts = {
        "threshold.csv": _csv(
            ["R", "lambda_R", "residual", "iterations"],
            [(p.radius, p.value, p.residual, p.iterations) for p in sweep]),
        "threshold.json": _json_text(summary),
    }
    return artifacts, {"lambda1": pair.value, "outcome": outcome.value}


def run_steady(cfg: ScenarioConfig):
    grid, kernel, response = _objects(cfg)
    transfer = time_integrate_kernel(kernel, grid)
    state = steady.solve_steady_state(transfer, response, tol=cfg.tol)
    summary = {
        "present": state.present,
        "lambda1": state.eigenvalue,
        "residual": state.residual,
        "iterations": state.iterations,
    }
    artifacts = {"steady.json": _json_text(summary)}
    if state.present:
        cols = _node_columns(grid) + ["U"]
        rows = [tuple(x) + (u,) for x, u in zip(grid.cell_nodes, state.values)]
        artifacts["steady.csv"] = _csv(cols, rows)
    return artifacts, {"present": state.present, "lambda1": state.eigenvalue}


def run_simulate(cfg: ScenarioConfig):
    grid, kernel, response = _objects(cfg)
    transfer = time_integrate_kernel(kernel, grid)
    forcing = cfg.build_forcing()
    field = dynamics.solve_initial_value(kernel, forcing, response, grid,
                                         dt=cfg.dt, horizon=cfg.horizon)
    final, settled = dynamics.long_time_limit(field)
    state = steady.solve_steady_state(transfer, response, tol=cfg.tol)
    outcome = dynamics.classify_outcome(final, state, cfg.tail_radius,
                                        tol=cfg.classify_tol, grid=grid,
                                        boundary_margin=cfg.boundary_margin)

    r = np.linalg.norm(grid.window_nodes, axis=1)
    tail = np.zeros(grid.n_window, dtype=bool)
    tail[grid.interior_indices(cfg.boundary_margin)] = True
    tail &= r >= cfg.tail_radius
    summary = {
        "outcome": outcome.value,
        "settled": bool(settled),
        "tail_min": float(np.min(final[tail])),
        "tail_max": float(np.max(final[tail])),
        "dt": cfg.dt,
        "horizon": cfg.horizon,
    }
    if state.present:
        gap = np.abs(final - grid.periodic_on_window(state.values))
        summary["tail_steady_gap"] = float(np.max(gap[tail]))

    stride = _time_stride(field.values.shape[0])
    times = cfg.dt * np.arange(field.values.shape[0])
    cols = ["t"] + _node_columns(grid) + ["u"]
    rows = []
    for n in range(0, len(times), stride):
        for x, u in zip(grid.window_nodes, field.values[n]):
            rows.append((times[n],) + tuple(x) + (u,))
    artifacts = {
        "simulate.csv": _csv(cols, rows),
        "simulate.json": _json_text(summary),
    }
    return artifacts, {"outcome": outcome.value, "settled": bool(settled)}


def run_speed(cfg: ScenarioConfig):
    grid, kernel, response = _objects(cfg)
    result = waves.minimal_speed(kernel, response, grid,
                                 direction=cfg.build_direction())
    summary = {
        "c_star": result.c_star,
        "rho_star": result.rho_star,
        "at_rest": result.at_rest,
        "direction": list(result.direction),
        "lambda_witness": result.value,
    }
    return {"speed.json": _json_text(summary)}, {
        "c_star": result.c_star, "at_rest": result.at_rest}


def run_wave(cfg: ScenarioConfig):
    grid, kernel, response = _objects(cfg)
    if cfg.speed_factor <= 1.0:
        raise ValidationError(
            f"run.speed_factor must exceed 1 for the wave pipeline, got "
            f"{cfg.speed_factor}"
        )
    result = waves.minimal_speed(kernel, response, grid,
                                 direction=cfg.build_direction())
    if result.at_rest:
        raise ValidationError(
            "the scenario is subcritical; no fronts exist to construct"
        )
    c = cfg.speed_factor * result.c_star
    transfer = time_integrate_kernel(kernel, grid)
    state = steady.solve_steady_state(transfer, response, tol=cfg.tol)
    pair = waves.build_sub_super(kernel, response, c, grid, state,
                                 speed=result, slices=cfg.slices)
    solution = waves.construct_wave(kernel, response, c, grid, state,
                                    speed=result, pair=pair,
                                    slices=cfg.slices, tol=cfg.wave_tol)
    x = grid.window_nodes[:, 0]
    rows = []
    for j, t in enumerate(solution.times):
        xi = x - c * t
        for i in range(grid.n_window):
            rows.append((xi[i], x[i] - np.floor(x[i]), solution.u[j, i]))
    summary = {
        "c": c,
        "c_star": result.c_star,
        "rho": pair.rho,
        "rho_prime": pair.rho_prime,
        "rho_super": pair.rho_super,
        "M": pair.M,
        "residual": solution.residual,
        "iterations": solution.iterations,
        "ascent": solution.ascent,
        "front_diagnostics": {
            str(k): v for k, v in solution.front_diagnostics.items()},
    }
    artifacts = {
        "wave.csv": _csv(["xi", "x_cell", "u"], rows),
        "wave.json": _json_text(summary),
    }
    return artifacts, {"c": c, "residual": solution.residual,
                       "iterations": solution.iterations}


def run_dispersion(cfg: ScenarioConfig):
    grid, kernel, response = _objects(cfg)
    direction = cfg.build_direction()
    rows = []
    for c in cfg.c_values:
        seed = None
        for rho in cfg.rho_values:
            point = waves.dispersion_eigenvalue(kernel, response, rho, c,
                                                grid, direction=direction,
                                                seed=seed)
            seed = point
            rows.append((rho, c, point.value))
    lam = [row[2] for row in rows]
    return {"dispersion.csv": _csv(["rho", "c", "lambda"], rows)}, {
        "points": len(rows),
        "lambda_min": min(lam),
        "lambda_max": max(lam),
    }


def run_sir_verify(cfg: ScenarioConfig):
    state = cfg.build_sir_state()
    sim = simulate_sir(state, dt=cfg.sir_dt, horizon=cfg.sir_horizon)
    gap = equivalence_check(state, dt=cfg.sir_dt, horizon=cfg.sir_horizon)
    grid = state.grid
    attack = sim.log_attack()
    stride = _time_stride(sim.S.shape[0])
    cols = ["t"] + _node_columns(grid) + ["S", "I", "u"]
    rows = []
    for n in range(0, sim.S.shape[0], stride):
        for i in range(grid.n_window):
            rows.append((sim.times[n],) + tuple(grid.window_nodes[i])
                        + (sim.S[n, i], sim.I[n, i], attack[n, i]))
    summary = {
        "sup_difference": gap,
        "dt": cfg.sir_dt,
        "spacing": grid.spacing,
    }
    artifacts = {
        "sir.csv": _csv(cols, rows),
        "sir.json": _json_text(summary),
    }
    return artifacts, {"sup_difference": gap}


def run_subwave_diag(cfg: ScenarioConfig):
    grid, kernel, response = _objects(cfg)
    if not 0.0 < cfg.sub_speed_factor < 1.0:
        raise ValidationError(
            f"run.sub_speed_factor must sit in (0, 1), got "
            f"{cfg.sub_speed_factor}"
        )
    result = waves.minimal_speed(kernel, response, grid,
                                 direction=cfg.build_direction())
    if result.at_rest:
        raise ValidationError(
            "the scenario is subcritical; below-minimal frames need c_star > 0"
        )
    c = cfg.sub_speed_factor * result.c_star
    osc = waves.oscillating_subsolution(kernel, response, c, grid,
                                        speed=result)
    x = grid.window_nodes[:, 0]
    rows = list(zip(x, osc.values, osc.applied))
    summary = {
        "c": c,
        "c_star": result.c_star,
        "rho_real": osc.rho_R,
        "rho_imag": osc.rho_I,
        "band": osc.band,
        "min_slack": osc.min_slack,
        "min_slack_on_support": osc.min_slack_on_support,
        "dominated": bool(osc.min_slack >= 0.0),
    }
    artifacts = {
        "subwave.csv": _csv(["x", "bump", "image"], rows),
        "subwave.json": _json_text(summary),
    }
    return artifacts, {"dominated": bool(osc.min_slack >= 0.0),
                       "min_slack_on_support": osc.min_slack_on_support}


COMMANDS = {
    "threshold": run_threshold,
    "steady": run_steady,
    "simulate": run_simulate,
    "speed": run_speed,
    "wave": run_wave,
    "dispersion": run_dispersion,
    "sir-verify": run_sir_verify,
    "subwave-diag": run_subwave_diag,
}
