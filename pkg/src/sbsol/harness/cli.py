"""Command-line interface.

Subcommands: ``solve <config>``, ``sweep <config>``, ``verify <suite>``,
``render <field.sbsf> <out.pgm>``.

Exit codes: 0 success/convergence; 1 configuration or setup errors (with a
line-numbered message for config files); 2 non-convergence or a failed
verification check; 3 no nontrivial state (subcritical coupling or a
collapsed iterate).
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from ..analysis import find_peaks
from ..errors import (ConfigError, InitFailed, NoBoxConvergence,
                      NotProjectable, SweepCapExceeded, TrivialState)
from ..solver import solve_ground_state, solve_whole_space
from . import figures
from .config import build_problem, parse_config_file
from .render import render_pgm
from .report import write_rows, write_solve_outputs
from .suites import SUITES, format_suite, run_suite, write_suite_csv
from .sweep import run_sweep, sweep_columns, sweep_rows, sweep_spec_from_config


def _cmd_solve(args) -> int:
    try:
        cfg = parse_config_file(args.config)
        setup = build_problem(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        if setup.whole_space:
            report = solve_whole_space(setup.model, setup.solver,
                                       nodes_per_axis=setup.nodes_per_axis)
        else:
            report = solve_ground_state(setup.model, setup.solver,
                                        grid=setup.grid)
    except (InitFailed, NotProjectable) as exc:
        print(f"no nontrivial state (subcritical or collapsed): {exc}",
              file=sys.stderr)
        return 3
    except NoBoxConvergence as exc:
        print(f"box doubling did not settle: {exc} "
              f"(sequence: {exc.sequence})", file=sys.stderr)
        return 2

    final_grid = report.state.grid
    model = replace(setup.model, domain=final_grid.domain)
    peaks = None
    try:
        peaks = find_peaks(report.state, model)
    except TrivialState:
        pass
    status = "converged" if report.converged else "failed"
    write_solve_outputs(setup.out_dir, model, final_grid.n, report, peaks,
                        status)
    if setup.figures:
        figures.solve_figures(setup.out_dir, report)
    print(f"{status}: c={report.c:.12g} residual={report.residual_norm:.3e} "
          f"iterations={report.iterations} -> {setup.out_dir}/report.csv")
    return 0 if report.converged else 2


def _cmd_sweep(args) -> int:
    try:
        cfg = parse_config_file(args.config)
        spec = sweep_spec_from_config(cfg)
        if spec.cell_count > spec.cap:
            raise SweepCapExceeded(
                f"sweep enumerates {spec.cell_count} cells, cap is {spec.cap}")
    except (ConfigError, SweepCapExceeded) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    results = run_sweep(cfg, spec)
    out_dir = cfg.get("output.dir")
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "sweep.csv")
    write_rows(path, sweep_rows(spec, results), sweep_columns(spec))
    if cfg.get("output.figures") and len(spec.axes) == 1:
        name, values = spec.axes[0]
        figures.sweep_figure(
            os.path.join(out_dir, "sweep.png"), name, list(values),
            [r.report.c if r.report is not None else None for r in results],
            [r.status for r in results])
    counts = {s: sum(r.status == s for r in results)
              for s in ("converged", "collapsed", "failed")}
    print(f"sweep: {len(results)} cells "
          f"({counts['converged']} converged, {counts['collapsed']} collapsed, "
          f"{counts['failed']} failed) -> {path}")
    return 0


def _cmd_verify(args) -> int:
    if args.suite not in SUITES:
        print(f"unknown suite {args.suite!r}; expected one of "
              f"{', '.join(sorted(SUITES))}", file=sys.stderr)
        return 1
    out_dir = args.out_dir
    try:
        result = run_suite(args.suite)
    except Exception as exc:  # setup failures, not check failures
        print(f"suite setup error: {exc}", file=sys.stderr)
        return 1
    print(format_suite(result))
    path = write_suite_csv(result, out_dir)
    print(f"wrote {path}")
    return 0 if result.passed else 2


def _cmd_render(args) -> int:
    try:
        render_pgm(args.field, args.out)
    except (OSError, ValueError) as exc:
        print(f"render error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sbsol",
        description="Least-energy states of cross-coupled cubic Schrodinger "
                    "systems on Dirichlet grids.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run one ground-state solve")
    p_solve.add_argument("config", help="path to a key=value config file")
    p_solve.set_defaults(func=_cmd_solve)

    p_sweep = sub.add_parser("sweep", help="run a parameter sweep")
    p_sweep.add_argument("config", help="config file with sweep.axes")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_verify = sub.add_parser("verify", help="run a verification suite")
    p_verify.add_argument("suite", help=f"one of: {', '.join(sorted(SUITES))}")
    p_verify.add_argument("--out-dir", default="out",
                          help="directory for suite_<name>.csv")
    p_verify.set_defaults(func=_cmd_verify)

    p_render = sub.add_parser("render", help="render a 2D field dump as PGM")
    p_render.add_argument("field", help="input .sbsf dump")
    p_render.add_argument("out", help="output .pgm image")
    p_render.set_defaults(func=_cmd_render)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
