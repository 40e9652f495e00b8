"""CSV reports and field dumps for solve and sweep runs.

Floats are written with 17 significant digits so reports reproduce losslessly
and diff cleanly; identical runs produce byte-identical files.
"""

from __future__ import annotations

import csv
import math
import os

from ..analysis import PeakReport
from ..fieldio import write_sbsf
from ..model import ModelSpec
from ..solver import GroundStateReport

REPORT_COLUMNS = (
    "status", "converged", "epsilon", "beta", "mu1", "mu2", "m",
    "dimension", "domain_kind", "extent1", "extent2", "extent3",
    "nodes_per_axis", "h1", "h2", "h3", "v1_lambda", "v2_lambda",
    "c", "A", "B", "E", "G", "residual", "iterations",
    "peak_u_x1", "peak_u_x2", "peak_u_x3", "peak_u_value",
    "peak_v1_x1", "peak_v1_x2", "peak_v1_x3", "peak_v1_value",
    "colocation", "d_peak_u", "d_peak_v1",
)


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return format(value, ".17g")
    return str(value)


def _pad3(values):
    out = list(values) + [None] * (3 - len(values))
    return out[:3]


def report_row(mdl: ModelSpec, nodes_per_axis: int, status: str,
               report: GroundStateReport = None,
               peaks: PeakReport = None) -> dict:
    row = {col: None for col in REPORT_COLUMNS}
    row.update(status=status, epsilon=mdl.epsilon, beta=mdl.beta,
               mu1=mdl.mu1, mu2=mdl.mu2, m=mdl.m,
               dimension=mdl.domain.dimension, domain_kind=mdl.domain.kind,
               nodes_per_axis=nodes_per_axis)
    ext = _pad3(mdl.domain.extents)
    row["extent1"], row["extent2"], row["extent3"] = ext
    if mdl.V1.kind in ("constant", "harmonic"):
        row["v1_lambda"] = mdl.V1.lam
    if mdl.V2.kind in ("constant", "harmonic"):
        row["v2_lambda"] = mdl.V2.lam
    if report is not None:
        g = report.state.grid
        h = _pad3(g.spacing)
        row["h1"], row["h2"], row["h3"] = h
        row.update(converged=report.converged, c=report.c, A=report.forms.A,
                   B=report.forms.B, E=report.forms.E, G=report.forms.G,
                   residual=report.residual_norm, iterations=report.iterations)
    if peaks is not None:
        p = _pad3(peaks.P)
        row["peak_u_x1"], row["peak_u_x2"], row["peak_u_x3"] = p
        q = _pad3(peaks.Q[0])
        row["peak_v1_x1"], row["peak_v1_x2"], row["peak_v1_x3"] = q
        row.update(peak_u_value=peaks.u_value, peak_v1_value=peaks.v_values[0],
                   colocation=peaks.colocation, d_peak_u=peaks.d_P,
                   d_peak_v1=peaks.d_Q1)
    return row


def write_rows(path, rows, extra_columns=()) -> None:
    columns = tuple(extra_columns) + REPORT_COLUMNS
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([fmt(row.get(col)) for col in columns])


def write_solve_outputs(out_dir, mdl: ModelSpec, nodes_per_axis: int,
                        report: GroundStateReport, peaks: PeakReport,
                        status: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    row = report_row(mdl, nodes_per_axis, status, report, peaks)
    write_rows(os.path.join(out_dir, "report.csv"), [row])
    g = report.state.grid
    write_sbsf(os.path.join(out_dir, "u.sbsf"), g, report.state.u)
    for j, w in enumerate(report.state.v, start=1):
        write_sbsf(os.path.join(out_dir, f"v{j}.sbsf"), g, w)
