"""Parameter sweeps over a fixed cross-product of axis values.

Cells are enumerated in declaration order with the last axis fastest, run
concurrently with per-cell seeds ``base seed + cell index``, and reported in
enumeration order regardless of completion order, so repeated sweeps write
byte-identical CSVs.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from ..analysis import find_peaks
from ..errors import (ConfigError, InitFailed, NoBoxConvergence,
                      NotProjectable, SweepCapExceeded, TrivialState)
from ..solver import max_workers, solve_ground_state, solve_whole_space
from .config import SWEEP_AXES, RunConfig, apply_axis_value, build_problem
from .report import report_row

DEFAULT_CELL_CAP = 4096


@dataclass(frozen=True)
class SweepSpec:
    """Ordered axes, each a (name, values) pair; cell count is capped."""

    axes: tuple
    cap: int = DEFAULT_CELL_CAP

    def __post_init__(self):
        for name, values in self.axes:
            if name not in SWEEP_AXES:
                raise ConfigError(f"unknown sweep axis {name!r}")
            if not values:
                raise ConfigError(f"sweep axis {name!r} has no values")

    @property
    def cell_count(self) -> int:
        count = 1
        for _, values in self.axes:
            count *= len(values)
        return count

    def cells(self):
        names = [name for name, _ in self.axes]
        for combo in itertools.product(*[values for _, values in self.axes]):
            yield tuple(zip(names, combo))


def sweep_spec_from_config(cfg: RunConfig) -> SweepSpec:
    names = cfg.get("sweep.axes")
    if not names:
        raise ConfigError("sweep requires sweep.axes")
    axes = []
    for name in names:
        if name not in cfg.sweep_values:
            raise ConfigError(f"missing sweep.values.{name}")
        axes.append((name, tuple(cfg.sweep_values[name])))
    return SweepSpec(axes=tuple(axes), cap=cfg.get("sweep.cap"))


@dataclass(frozen=True)
class CellResult:
    index: int
    overrides: tuple
    status: str              # converged | collapsed | failed
    row: dict
    report: object = None
    message: str = ""


def run_cell(cfg: RunConfig, overrides, index: int) -> CellResult:
    for axis, value in overrides:
        cfg = apply_axis_value(cfg, axis, value)
    cfg = cfg.with_key("solver.seed", cfg.get("solver.seed") + index)
    setup = build_problem(cfg)
    status, report, peaks, message = "converged", None, None, ""
    try:
        if setup.whole_space:
            report = solve_whole_space(setup.model, setup.solver,
                                       nodes_per_axis=setup.nodes_per_axis)
        else:
            report = solve_ground_state(setup.model, setup.solver,
                                        grid=setup.grid)
        if not report.converged:
            status = "failed"
            message = "did not converge"
        elif report.state.max_abs() < 1e-8:
            status = "collapsed"
            message = "peak below collapse floor"
        else:
            try:
                peaks = find_peaks(report.state, setup.model)
            except TrivialState:
                status = "collapsed"
                message = "trivial state"
    except (InitFailed, NotProjectable) as exc:
        status, message = "collapsed", str(exc)
    except NoBoxConvergence as exc:
        status, message = "failed", str(exc)
    row = report_row(setup.model, setup.nodes_per_axis, status, report, peaks)
    for axis, value in overrides:
        row[f"axis_{axis.replace('.', '_')}"] = value
    return CellResult(index=index, overrides=tuple(overrides), status=status,
                      row=row, report=report, message=message)


def run_sweep(cfg: RunConfig, spec: SweepSpec = None):
    """All cells, concurrently; results ordered by cell index."""
    if spec is None:
        spec = sweep_spec_from_config(cfg)
    if spec.cell_count > spec.cap:
        raise SweepCapExceeded(
            f"sweep enumerates {spec.cell_count} cells, cap is {spec.cap}")
    cells = list(spec.cells())
    with ThreadPoolExecutor(max_workers=max_workers()) as pool:
        futures = [pool.submit(run_cell, cfg, overrides, i)
                   for i, overrides in enumerate(cells)]
        results = [f.result() for f in futures]
    return results


def sweep_columns(spec: SweepSpec):
    return tuple(["cell"]
                 + [f"axis_{name.replace('.', '_')}" for name, _ in spec.axes])


def sweep_rows(spec: SweepSpec, results):
    rows = []
    for res in results:
        row = dict(res.row)
        row["cell"] = res.index
        rows.append(row)
    return rows
