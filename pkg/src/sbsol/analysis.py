"""Observables of converged states: peaks, symmetry, decay and scaling.

Peak locations are refined below the grid spacing by a per-axis quadratic
fit, which makes the peak-separation measurement meaningful at the grid
resolution.  Radial diagnostics bin nodes into shells one spacing wide.
Decay fits run over an annulus that excludes both the core (within
``3 eps/sqrt(lam)`` of the peak) and a five-spacing collar at the boundary,
where the Dirichlet condition contaminates the tail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import OutOfDomain, TrivialState, WindowTooSmall
from .grid import Grid, ScalarField, sample_field
from .model import ModelSpec, State
from .solver import SolverConfig, solve_ground_state

DECAY_SIGMA = 0.01        # fixed slack in the reference decay rate
_MIN_WINDOW_NODES = 10
_LOCAL_MAX_FRACTION = 0.5  # local maxima below this fraction of the peak are ignored


@dataclass(frozen=True)
class PeakReport:
    """Refined peak locations and values, their separation, and boundary distances."""

    P: tuple                 # argmax of u
    Q: tuple                 # argmax of each v_j
    u_value: float
    v_values: tuple
    colocation: float        # |P - Q_1| / epsilon
    d_P: float               # distance of P to the boundary
    d_Q1: float
    local_max_counts: tuple  # strict local maxima above half peak, per component


@dataclass(frozen=True)
class RadialProfile:
    """Shell statistics of one field around a center."""

    radii: np.ndarray        # shell midpoints
    means: np.ndarray
    anisotropy: float        # max over shells of (max - min) / global peak
    monotone_violation: float  # largest positive outward jump of shell means
    increases: tuple         # (shell index, jump) for every positive jump


@dataclass(frozen=True)
class RadialDiagnostics:
    anisotropy: float
    profiles: tuple
    monotone_violation: float


@dataclass(frozen=True)
class DecayFit:
    component: str
    kappa: float             # fitted decay rate per unit length
    window: tuple            # (r1, r2) actually used
    residual: float          # rms of log-residuals
    reference_rate: float    # sqrt(lam) (1 - sigma) / epsilon
    passes: bool


@dataclass(frozen=True)
class RescaledProfile:
    center: tuple
    y_axes: tuple
    values: np.ndarray


def _refine_peak(grid: Grid, values, interior_index):
    """Per-axis quadratic fit through the node and its two axis neighbors.

    Missing neighbors read zero (the Dirichlet extension).  Offsets are
    clamped to half a spacing.
    """
    full = grid.embed(values)
    idx = grid.node_index(interior_index)
    point = []
    for ax in range(grid.ndim):
        i = idx[ax]
        sl = list(idx)

        def at(j):
            if j < 0 or j >= grid.n:
                return 0.0
            sl[ax] = j
            return float(full[tuple(sl)])

        f0, fc, f1 = at(i - 1), at(i), at(i + 1)
        denom = f0 - 2.0 * fc + f1
        delta = 0.0
        if denom < 0.0:
            delta = 0.5 * (f0 - f1) / denom
            delta = max(-0.5, min(0.5, delta))
        point.append(grid.axes[ax][i] + delta * grid.spacing[ax])
    return tuple(point)


def _local_max_count(grid: Grid, values) -> int:
    full = grid.embed(values)
    pad = np.pad(full, 1)
    inner = slice(1, -1)
    strict = np.ones(grid.shape, dtype=bool)
    for ax in range(grid.ndim):
        lo = tuple(inner if i != ax else slice(0, -2) for i in range(grid.ndim))
        hi = tuple(inner if i != ax else slice(2, None) for i in range(grid.ndim))
        strict &= (full > pad[lo]) & (full > pad[hi])
    strict &= grid.mask
    strict &= full > _LOCAL_MAX_FRACTION * float(values.max())
    return int(np.count_nonzero(strict))


def find_peaks(s: State, mdl: ModelSpec) -> PeakReport:
    """Global argmax per component (lexicographic ties), quadratically refined."""
    grid = s.grid
    peaks = []
    values = []
    counts = []
    for field in (s.u, *s.v):
        arr = field.values
        if float(arr.max()) <= 0.0:
            raise TrivialState("component is identically zero (or nonpositive)")
        k = int(np.argmax(arr))  # first occurrence = lexicographic smallest node
        peaks.append(_refine_peak(grid, arr, k))
        values.append(float(arr[k]))
        counts.append(_local_max_count(grid, arr))
    P, Q = peaks[0], tuple(peaks[1:])
    sep = math.dist(P, Q[0])
    dom = mdl.domain
    return PeakReport(P=P, Q=Q, u_value=values[0], v_values=tuple(values[1:]),
                      colocation=sep / mdl.epsilon,
                      d_P=dom.boundary_distance(P),
                      d_Q1=dom.boundary_distance(Q[0]),
                      local_max_counts=tuple(counts))


def radial_profile(f: ScalarField, center) -> RadialProfile:
    """Bin interior nodes into shells one grid spacing wide around ``center``.

    Anisotropy is the per-shell spread of values after removing the radial
    trend (each node is compared against the shell-mean profile interpolated
    at its own radius), normalized by the global peak; an exactly radial
    field therefore measures only the profile interpolation error.
    """
    grid = f.grid
    shell_h = max(grid.spacing)
    r = np.sqrt(np.sum((grid.coords - np.asarray(center, dtype=float)) ** 2,
                       axis=1))
    k = np.floor(r / shell_h).astype(int)
    nshell = int(k.max()) + 1
    counts = np.bincount(k, minlength=nshell)
    sums = np.bincount(k, weights=f.values, minlength=nshell)
    peak = float(f.values.max())
    occupied = counts > 0
    means = sums[occupied] / counts[occupied]
    radii = (np.flatnonzero(occupied) + 0.5) * shell_h
    delta = f.values - np.interp(r, radii, means)
    lo = np.full(nshell, np.inf)
    hi = np.full(nshell, -np.inf)
    np.minimum.at(lo, k, delta)
    np.maximum.at(hi, k, delta)
    spread = float(np.max(hi[occupied] - lo[occupied])) if peak > 0 else 0.0
    anis = spread / peak if peak > 0 else 0.0
    jumps = np.diff(means)
    increases = tuple((int(i), float(j)) for i, j in enumerate(jumps) if j > 0)
    violation = float(max(jumps.max(), 0.0)) if jumps.size else 0.0
    return RadialProfile(radii=radii, means=means, anisotropy=anis,
                         monotone_violation=violation, increases=increases)


def radial_diagnostics(s: State, center) -> RadialDiagnostics:
    """Worst-case anisotropy and outward jump across all components."""
    if not s.grid.domain.contains(center):
        raise OutOfDomain("center lies outside the domain")
    profiles = tuple(radial_profile(f, center) for f in (s.u, *s.v))
    return RadialDiagnostics(
        anisotropy=max(p.anisotropy for p in profiles),
        profiles=profiles,
        monotone_violation=max(p.monotone_violation for p in profiles))


def decay_fit(f: ScalarField, peak, mdl: ModelSpec, lam: float,
              component: str = "") -> DecayFit:
    """Least-squares slope of log f against distance from the peak."""
    grid = f.grid
    r = np.sqrt(np.sum((grid.coords - np.asarray(peak, dtype=float)) ** 2,
                       axis=1))
    r1 = 3.0 * mdl.epsilon / math.sqrt(lam)
    collar = 5.0 * max(grid.spacing)
    bdist = np.array([mdl.domain.boundary_distance(p) for p in grid.coords])
    keep = (r >= r1) & (bdist >= collar) & (f.values > 0.0)
    if int(np.count_nonzero(keep)) < _MIN_WINDOW_NODES:
        raise WindowTooSmall(
            f"decay window holds {int(np.count_nonzero(keep))} nodes "
            f"(need {_MIN_WINDOW_NODES})")
    rr = r[keep]
    logf = np.log(f.values[keep])
    slope, intercept = np.polyfit(rr, logf, 1)
    kappa = -float(slope)
    resid = float(np.sqrt(np.mean((logf - (slope * rr + intercept)) ** 2)))
    ref = math.sqrt(lam) * (1.0 - DECAY_SIGMA) / mdl.epsilon
    return DecayFit(component=component, kappa=kappa,
                    window=(float(r1), float(rr.max())), residual=resid,
                    reference_rate=ref, passes=kappa >= ref)


def rescale_profile(f: ScalarField, center, eps: float, y_axes) -> RescaledProfile:
    """Sample ``f(center + eps * y)`` on a tensor grid of offsets ``y``."""
    grid = f.grid
    center = tuple(float(c) for c in np.atleast_1d(center))
    axes = tuple(np.asarray(a, dtype=float) for a in y_axes)
    if len(axes) != grid.ndim:
        raise ValueError("need one offset axis per dimension")
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1) * eps + np.asarray(center)
    for p in pts:
        if not grid.domain.contains(p):
            raise OutOfDomain(f"sample point {tuple(p)} lies outside the domain")
    vals = sample_field(grid, f, pts).reshape([a.size for a in axes])
    return RescaledProfile(center=center, y_axes=axes, values=vals)


@dataclass(frozen=True)
class ScalingRow:
    eps: float
    c: float
    c_scaled: float          # c / eps^N
    converged: bool


@dataclass(frozen=True)
class ScalingTable:
    rows: tuple
    spread: float            # (max - min) / mean of the scaled column


def scaling_table(mdl: ModelSpec, eps_list, cfg: SolverConfig, *,
                  base_nodes: int) -> ScalingTable:
    """Solve a descending epsilon family with spacing refined proportionally.

    ``base_nodes`` is the per-axis node count at the first (largest) epsilon;
    smaller epsilons get proportionally more nodes so that h/eps is constant.
    """
    eps_list = [float(e) for e in eps_list]
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("epsilon list must be strictly descending")
    ndim = mdl.domain.dimension
    rows = []
    for eps in eps_list:
        nodes = round((base_nodes - 1) * eps_list[0] / eps) + 1
        rep = solve_ground_state(replace(mdl, epsilon=eps), cfg,
                                 nodes_per_axis=nodes)
        rows.append(ScalingRow(eps=eps, c=rep.c, c_scaled=rep.c / eps**ndim,
                               converged=rep.converged))
    scaled = [row.c_scaled for row in rows if row.converged]
    spread = 0.0
    if len(scaled) > 1:
        spread = (max(scaled) - min(scaled)) / (sum(scaled) / len(scaled))
    return ScalingTable(rows=tuple(rows), spread=spread)
