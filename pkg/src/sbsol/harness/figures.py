"""Matplotlib figures rendered next to the CSV outputs."""

from __future__ import annotations

import os

import numpy as np


def _plt():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def fields_figure(path, report) -> None:
    """Component profiles: line plot in 1D, heatmaps in 2D, mid-slice in 3D."""
    plt = _plt()
    state = report.state
    g = state.grid
    names = ["u"] + [f"v{j}" for j in range(1, len(state.v) + 1)]
    fields = [state.u] + list(state.v)
    if g.ndim == 1:
        fig, ax = plt.subplots(figsize=(6.0, 3.6))
        x = g.coords[:, 0]
        for name, f in zip(names, fields):
            ax.plot(x, f.values, label=name, lw=1.2)
        ax.set_xlabel("x")
        ax.set_ylabel("amplitude")
        ax.legend(frameon=False)
    else:
        fig, axes = plt.subplots(1, len(fields),
                                 figsize=(3.4 * len(fields), 3.2),
                                 squeeze=False)
        for ax, name, f in zip(axes[0], names, fields):
            full = g.embed(f.values)
            if g.ndim == 3:
                full = full[:, :, g.n // 2]
            extent = (g.axes[1][0], g.axes[1][-1], g.axes[0][0], g.axes[0][-1])
            im = ax.imshow(full, origin="lower", extent=extent, cmap="magma")
            fig.colorbar(im, ax=ax, shrink=0.85)
            ax.set_title(name)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def convergence_figure(path, report) -> None:
    """Energy and residual traces over the iteration history."""
    plt = _plt()
    hist = np.asarray(report.history)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.0, 3.2))
    ax1.plot(hist[:, 0], hist[:, 1], lw=1.0)
    ax1.set_xlabel("iteration")
    ax1.set_ylabel("energy on constraint set")
    ax2.semilogy(hist[:, 0], np.maximum(hist[:, 3], 1e-300), lw=1.0,
                 label="residual")
    ax2.semilogy(hist[:, 0], np.maximum(hist[:, 2], 1e-300), lw=0.8,
                 label="|G|")
    ax2.set_xlabel("iteration")
    ax2.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def sweep_figure(path, axis_name, values, cs, statuses) -> None:
    """Attained energy against a single sweep axis, marked by cell status."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    colors = {"converged": "tab:blue", "collapsed": "tab:red",
              "failed": "tab:orange"}
    for status in ("converged", "collapsed", "failed"):
        xs = [v for v, s in zip(values, statuses) if s == status]
        ys = [c if c is not None else 0.0
              for c, s in zip(cs, statuses) if s == status]
        if xs:
            ax.scatter(xs, ys, s=24, label=status, color=colors[status])
    ax.set_xlabel(axis_name)
    ax.set_ylabel("c")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def solve_figures(out_dir, report) -> None:
    fields_figure(os.path.join(out_dir, "fields.png"), report)
    convergence_figure(os.path.join(out_dir, "convergence.png"), report)
