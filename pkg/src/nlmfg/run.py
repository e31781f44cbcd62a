"""Run orchestration: build the problem, solve, and write the artifact set."""

from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import dataclass

import numpy as np

from nlmfg.config import RunConfig
from nlmfg.experiments import spread_metrics, turnpike_diagnostics
from nlmfg.fieldio import HistoryWriter, emit_heatmap, write_field_csv
from nlmfg.grid import integrate
from nlmfg.pdhg.solver import solve

log = logging.getLogger(__name__)


@dataclass
class RunOutcome:
    status: int
    summary: dict
    out_dir: str


def _tag(t: float) -> str:
    return f"t{t:.3f}"


def run(config: RunConfig, out_dir: str | None = None, dry_run: bool = False) -> RunOutcome:
    """Solve the configured problem and write fields, history, figures and a summary.

    Files written to the output directory:

    - ``config.json``: canonical echo of the configuration
    - ``rho_t0.100.csv`` / ``phi_t0.100.csv`` (one pair per snapshot time)
    - ``rho_t0.100.pgm`` / ``phi_t0.100.pgm`` when ``"pgm"`` is requested
    - ``history.csv``: residual rows, streamed while the solver runs
    - ``rho_snapshots.png``, ``phi_snapshots.png``, ``residuals.png`` when ``"png"`` is requested
    - ``summary.json``: final residuals, iterations, wall time, config echo,
      heatmap normalization and preset-specific diagnostics

    A dry run writes nothing and returns the config echo. The status is 0 after
    a solve (converged or not, see ``summary["converged"]``).
    """
    out = out_dir or config.out_dir
    if dry_run:
        return RunOutcome(0, {"dry_run": True, "config": config.to_dict()}, out)

    spec = config.build()
    grid = spec.grid
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "config.json"), "w", encoding="utf-8") as fh:
        fh.write(config.to_json())

    start = time.perf_counter()
    with HistoryWriter(os.path.join(out, "history.csv")) as history_sink:
        result = solve(spec, config.steps, max_iters=config.max_iters, tol=config.tol,
                       history_stride=config.history_stride, on_record=history_sink)
    wall = time.perf_counter() - start
    if not result.converged:
        log.warning("%s: stopping residual %.3e above tol %.1e after %d iterations",
                    spec.name, result.residuals.stopping, config.tol, result.iterations)

    heatmaps = {}
    snapshots = []
    for t in config.snapshot_times:
        level = grid.level_of(t)
        snapshots.append(level)
        for label, arr in (("rho", result.rho), ("phi", result.phi)):
            field = arr[level]
            stem = os.path.join(out, f"{label}_{_tag(t)}")
            meta = {"field": label, "time": t, "level": level, "preset": spec.name}
            if "csv" in config.formats:
                write_field_csv(stem + ".csv", field, grid, meta)
            if "pgm" in config.formats:
                heatmaps[os.path.basename(stem) + ".pgm"] = emit_heatmap(field, stem + ".pgm")

    if "png" in config.formats:
        from nlmfg import plotting

        times = list(config.snapshot_times)
        plotting.snapshot_figure([result.rho[lv] for lv in snapshots], times, grid,
                                 os.path.join(out, "rho_snapshots.png"), r"$\rho$")
        plotting.snapshot_figure([result.phi[lv] for lv in snapshots], times, grid,
                                 os.path.join(out, "phi_snapshots.png"), r"$\phi$")
        if result.history:
            plotting.residual_figure(result.history, os.path.join(out, "residuals.png"))

    masses = np.asarray(integrate(result.rho, grid))
    summary = {
        "preset": spec.name,
        "converged": result.converged,
        "iterations": result.iterations,
        "wall_time_s": wall,
        "residuals": {
            "continuity_res": result.residuals.continuity_res,
            "a_fixedpoint_res": result.residuals.a_fixedpoint_res,
            "iterate_change": result.residuals.iterate_change,
            "complementarity_res": result.residuals.complementarity_res,
        },
        "max_mass_drift": float(np.max(np.abs(masses - 1.0))),
        "snapshot_levels": dict(zip((_tag(t) for t in config.snapshot_times), snapshots)),
        "heatmap_normalization": heatmaps,
        "diagnostics": _diagnostics(spec, result),
        "config": config.to_dict(),
    }
    with open(os.path.join(out, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return RunOutcome(0, summary, out)


def _diagnostics(spec, result) -> dict:
    grid = spec.grid
    if spec.name == "spread":
        return {_tag(t): dict(zip(("var_x1", "var_x2"), spread_metrics(result.rho[grid.level_of(t)], grid)))
                for t in (0.1, 0.5, 0.9)}
    if spec.name == "turnpike":
        report = turnpike_diagnostics(result.phi, result.rho, grid, spec.time_scale)
        return {
            "lambda_mid": report.lambda_mid,
            "lambda_relative_variation": report.relative_variation(),
            "stationarity_0.4_0.6": report.stationarity(0.4, 0.6),
            "drift": report.drift,
        }
    return {}
