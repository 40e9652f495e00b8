"""Least-energy states by projected gradient descent on the constraint set.

Scheme per iteration, starting from a nonnegative state with positive quartic
form:

1. take a gradient step on the energy along the descent direction ``+r``
   (the stationarity residual), with a backtracking line search (factor 0.5,
   at most 30 halvings, step reset to ``step0`` every iteration) on the
   scale-invariant merit ``J = A^2/(4B)``;
2. clamp negative values to zero (projection onto the admissible cone);
3. rescale onto the constraint set ``A = B``.

A step is accepted on sufficient decrease (Armijo test against the exact
directional derivative ``dJ/dt|0 = -integral of |r|^2``, which holds on the
constraint set); if no trial achieves that, the best merely non-increasing
trial is taken, so accepted J values never grow beyond a 1e-12 relative
slack.  Convergence requires both energy stagnation and a small normalized
stationarity residual, because the rescaling alone makes the energy stagnate
near any constraint-set point.

Runs are deterministic: quadrature uses a fixed summation order and the
default initializer is a deterministic Gaussian pair.  Independent solves
(box-doubling stages, map points, sweep cells) may execute concurrently; each
owns its state and results are collected in a deterministic order.

Line-search internals: along the ray ``s + t r`` the forms are exact
polynomials in ``t`` (A quadratic, B quartic) as long as no clamping is
active, i.e. for ``t <= min over {r<0} of s/|r|``.  Their coefficients are
assembled once per iteration, making trial steps in that range free; larger
trial steps fall back to full quadrature of the clamped state.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import InitFailed, NoBoxConvergence, NotProjectable
from .grid import DomainSpec, Grid, ScalarField, build_grid
from .model import (FormsEvaluator, FormsReport, ModelSpec, PotentialSpec,
                    State, trap_diagnostics)

_J_SLACK = 1e-12          # accepted steps may not increase J beyond this
_ARMIJO = 1e-4
_MAX_HALVINGS = 30
_COLLAPSE_PEAK = 1e-8     # post-projection peak below this counts as collapse


@dataclass(frozen=True)
class SolverConfig:
    """Iteration controls; see module docstring for the scheme."""

    max_iters: int = 30000
    tol_energy: float = 1e-9
    tol_residual: float = 1e-6
    step0: float = 1.0
    backtrack: float = 0.5
    seed: int = 0
    box_doubling: bool = False
    box_tol: float = 1e-6
    max_doublings: int = 3
    allow_subcritical: bool = False

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.tol_energy <= 0.0 or self.tol_residual <= 0.0 or self.box_tol <= 0.0:
            raise ValueError("tolerances must be positive")
        if not 0.0 < self.backtrack < 1.0:
            raise ValueError("backtrack factor must lie in (0, 1)")
        if self.step0 <= 0.0:
            raise ValueError("step0 must be positive")


@dataclass(frozen=True)
class GroundStateReport:
    """Converged (or final) state on the constraint set plus diagnostics.

    ``history`` rows are ``(iteration, E, |G|, residual_norm)``.  For
    whole-space runs ``box_sequence`` lists ``(domain_size, c)`` per stage.
    """

    state: State
    c: float
    forms: FormsReport
    iterations: int
    converged: bool
    residual_norm: float
    history: tuple
    box_sequence: tuple = ()


def _refuse_subcritical(mdl: ModelSpec, cfg: SolverConfig):
    if not mdl.supercritical and not cfg.allow_subcritical:
        raise InitFailed(
            f"coupling beta={mdl.beta} is at or below the threshold "
            f"sqrt(mu1*mu2)={mdl.coupling_threshold}; only the trivial state exists")


def default_init(mdl: ModelSpec, cfg: SolverConfig, grid: Grid) -> State:
    """Co-centered Gaussian pair ``(alpha w, w, ..., w)`` with positive quartic form.

    The bump sits at the grid minimizer of V1+V2 (the domain center for
    constant potentials) with width ~ epsilon/sqrt(min V).  The ratio alpha
    runs over a fixed trial list and the quartic form is checked directly.
    """
    _refuse_subcritical(mdl, cfg)
    ev = FormsEvaluator(mdl, grid)
    vsum = ev.v1 + ev.v2
    if float(np.ptp(vsum)) == 0.0:
        x0 = grid.coords[grid.nearest_interior_index(mdl.domain.center)]
    else:
        x0 = grid.coords[int(np.argmin(vsum))]
    vmin = float(vsum.min()) / 2.0
    sigma = mdl.epsilon / math.sqrt(max(vmin, 1e-300))
    sigma = min(sigma, min(mdl.domain.half_widths) / 2.0)
    sigma = max(sigma, 1.5 * max(grid.spacing))
    r2 = np.sum((grid.coords - x0) ** 2, axis=1)
    w = np.exp(-r2 / (2.0 * sigma * sigma))

    alphas = [1.0]
    if mdl.mu1 < 0.0:
        alphas.append(math.sqrt(mdl.mu2 / mdl.mu1))
    alphas.extend([2.0, 0.5])
    for alpha in alphas:
        u = alpha * w
        vs = [w] * mdl.m
        if ev.quartic_raw(u, vs) > 0.0:
            return State(ScalarField(grid, u),
                         tuple(ScalarField(grid, w) for _ in range(mdl.m)))
    raise InitFailed("no trial amplitude ratio gives a positive quartic form")


class _Engine:
    """Stacked-array kernels for the inner loop.

    The state is a (components, cells) float array over the full bounding-box
    lattice with zeros outside the interior; all reductions use numpy's fixed
    pairwise order, so identical inputs give bit-identical runs.
    """

    def __init__(self, ev: FormsEvaluator):
        mdl, grid = ev.mdl, ev.grid
        self.grid = grid
        self.shape = grid.shape
        self.ndim = grid.ndim
        self.k = 1 + mdl.m
        self.vol = grid.cell_volume
        self.eps2 = mdl.epsilon**2
        self.beta = mdl.beta
        self.mu = np.array([mdl.mu1] + [mdl.mu2] * mdl.m)
        self.maskf = grid.mask.astype(float).ravel()
        self.V = np.stack([grid.embed(ev.v1).ravel()]
                          + [grid.embed(ev.v2).ravel()] * mdl.m)
        self.axis_w = tuple(self.vol / (h * h) for h in grid.spacing)

    def from_state(self, s: State):
        g = self.grid
        rows = [g.embed(s.u.values).ravel()]
        rows += [g.embed(w.values).ravel() for w in s.v]
        return np.stack(rows)

    def to_state(self, S) -> State:
        g = self.grid
        fields = [ScalarField(g, S[i].reshape(self.shape)[g.mask])
                  for i in range(self.k)]
        return State(fields[0], tuple(fields[1:]))

    def _diffs(self, S):
        D = S.reshape((self.k,) + self.shape)
        return [np.diff(D, axis=1 + ax) for ax in range(self.ndim)]

    def forms(self, S):
        dS = self._diffs(S)
        A = self.eps2 * sum(w * float(np.sum(d * d))
                            for w, d in zip(self.axis_w, dS))
        P = S * S
        A += self.vol * float(np.sum(self.V * P))
        B = float(np.sum((P * P).sum(axis=1) * self.mu))
        B += 2.0 * self.beta * float(np.sum(P[0] * P[1:].sum(axis=0)))
        return A, self.vol * B

    def laplacian(self, S):
        D = np.pad(S.reshape((self.k,) + self.shape),
                   [(0, 0)] + [(1, 1)] * self.ndim)
        flat = S.reshape((self.k,) + self.shape)
        out = np.zeros_like(flat)
        inner = slice(1, -1)
        for ax, h in enumerate(self.grid.spacing):
            lo = (slice(None),) + tuple(
                inner if i != ax else slice(0, -2) for i in range(self.ndim))
            hi = (slice(None),) + tuple(
                inner if i != ax else slice(2, None) for i in range(self.ndim))
            out += (D[lo] + D[hi] - 2.0 * flat) / (h * h)
        return out.reshape(self.k, -1)

    def residual(self, S, P=None):
        """Stationarity residuals, zeroed outside the interior."""
        if P is None:
            P = S * S
        R = self.eps2 * self.laplacian(S) - self.V * S + self.mu[:, None] * P * S
        cross = np.empty_like(S)
        cross[0] = S[0] * P[1:].sum(axis=0)
        cross[1:] = S[1:] * P[0]
        R += self.beta * cross
        R *= self.maskf
        return R

    def residual_norm(self, S, R, P=None):
        if P is None:
            P = S * S
        den = float(np.sum(P))
        if den == 0.0:
            return 0.0
        worst = float((R * R).sum(axis=1).max())
        return math.sqrt(worst / den)


class _RayPolys:
    """Exact A(t), B(t) along ``S + t R`` while no clamping is active."""

    def __init__(self, eng: _Engine, S, R, A0, P):
        Pr = S * R
        R2 = R * R
        dS = eng._diffs(S)
        dR = eng._diffs(R)
        x = sum(w * float(np.sum(a * b))
                for w, a, b in zip(eng.axis_w, dS, dR))
        a2 = sum(w * float(np.sum(b * b)) for w, b in zip(eng.axis_w, dR))
        vol = eng.vol
        self.a = (A0,
                  2.0 * (eng.eps2 * x + vol * float(np.sum(eng.V * Pr))),
                  eng.eps2 * a2 + vol * float(np.sum(eng.V * R2)))

        pp = np.einsum("im,jm->ij", P, P)
        ppr = np.einsum("im,jm->ij", P, Pr)
        pr2 = np.einsum("im,jm->ij", P, R2)
        prpr = np.einsum("im,jm->ij", Pr, Pr)
        prr2 = np.einsum("im,jm->ij", Pr, R2)
        r2r2 = np.einsum("im,jm->ij", R2, R2)
        mu = eng.mu
        di = np.arange(eng.k)
        b = np.array([
            float(np.sum(mu * pp[di, di])),
            float(np.sum(mu * 4.0 * ppr[di, di])),
            float(np.sum(mu * (4.0 * prpr[di, di] + 2.0 * pr2[di, di]))),
            float(np.sum(mu * 4.0 * prr2[di, di])),
            float(np.sum(mu * r2r2[di, di])),
        ])
        tb = 2.0 * eng.beta
        for j in range(1, eng.k):
            b[0] += tb * pp[0, j]
            b[1] += tb * 2.0 * (ppr[j, 0] + ppr[0, j])
            b[2] += tb * (pr2[j, 0] + 4.0 * prpr[0, j] + pr2[0, j])
            b[3] += tb * 2.0 * (prr2[0, j] + prr2[j, 0])
            b[4] += tb * r2r2[0, j]
        self.b = vol * b
        self.R2 = R2

    def eval(self, t):
        a0, a1, a2 = self.a
        A = a0 + t * (a1 + t * a2)
        b = self.b
        B = b[0] + t * (b[1] + t * (b[2] + t * (b[3] + t * b[4])))
        return A, B


def solve_ground_state(mdl: ModelSpec, cfg: SolverConfig, init: State = None,
                       *, grid: Grid = None, nodes_per_axis: int = None
                       ) -> GroundStateReport:
    """Run the projected descent to a least-energy candidate.

    The grid is taken from ``init`` when given, else from ``grid``, else
    built from ``mdl.domain`` with ``nodes_per_axis`` nodes.
    """
    _refuse_subcritical(mdl, cfg)
    if init is not None:
        grid = init.grid
    elif grid is None:
        if nodes_per_axis is None:
            raise ValueError("need an init state, a grid, or nodes_per_axis")
        grid = build_grid(mdl.domain, nodes_per_axis)

    ev = FormsEvaluator(mdl, grid)
    eng = _Engine(ev)
    s0 = init if init is not None else default_init(mdl, cfg, grid)
    S = np.maximum(eng.from_state(s0), 0.0)
    A, B = eng.forms(S)
    if B <= 0.0:
        raise NotProjectable("initial state has non-positive quartic form")
    t0 = A / B
    S *= math.sqrt(t0)
    A, B = t0 * A, t0 * t0 * B
    J = A * A / (4.0 * B)

    history = []
    converged = False
    last_dj = math.inf
    iterations = 0
    final_res = 0.0

    for it in range(cfg.max_iters):
        iterations = it
        P = S * S
        R = eng.residual(S, P)
        res = eng.residual_norm(S, R, P)
        final_res = res
        history.append((it, A / 2.0 - B / 4.0, abs(A - B), res))
        if last_dj <= cfg.tol_energy and res <= cfg.tol_residual:
            converged = True
            break

        polys = _RayPolys(eng, S, R, A, P)
        dj0 = -eng.vol * float(np.sum(polys.R2))
        # largest step that keeps every node nonnegative (poly validity range)
        neg = R < 0.0
        t_poly = float(np.min(S[neg] / -R[neg])) if neg.any() else math.inf

        t = cfg.step0
        accepted = None
        fallback = None          # best merely non-increasing trial (t, J)
        saw_positive_b = False
        for _ in range(_MAX_HALVINGS + 1):
            if t <= t_poly:
                At, Bt = polys.eval(t)
            else:
                W = np.maximum(S + t * R, 0.0)
                At, Bt = eng.forms(W)
            if Bt > 0.0:
                saw_positive_b = True
                Jt = At * At / (4.0 * Bt)
                if Jt <= J + _ARMIJO * t * dj0:
                    accepted = (t, At, Bt, Jt)
                    break
                if Jt <= J + _J_SLACK * abs(J) and (
                        fallback is None or Jt < fallback[3]):
                    fallback = (t, At, Bt, Jt)
            t *= cfg.backtrack
        if accepted is None:
            accepted = fallback
        if accepted is None:
            if not saw_positive_b:
                raise NotProjectable(
                    "clamping drove the quartic form non-positive; "
                    "iterate collapsed")
            converged = res <= cfg.tol_residual  # J stagnated exactly
            break

        t, At, Bt, Jt = accepted
        S = S + t * R
        if t > t_poly:
            np.maximum(S, 0.0, out=S)
        t0 = At / Bt
        S *= math.sqrt(t0)
        A, B = t0 * At, t0 * t0 * Bt
        last_dj = abs(J - Jt) / max(abs(J), 1e-300)
        J = Jt
        if float(S.max()) < _COLLAPSE_PEAK:
            raise NotProjectable("iterate collapsed below the peak floor")

    state = eng.to_state(S)
    forms = ev.forms(state)       # requadrature of the final fields
    return GroundStateReport(state=state, c=forms.E, forms=forms,
                             iterations=iterations, converged=converged,
                             residual_norm=final_res, history=tuple(history))


def _embed_state(old: State, new_grid: Grid) -> State:
    """Zero-extend a state onto an enclosing grid with the same spacing.

    Returns None when the old lattice does not align with the new one.
    """
    og = old.grid
    if og.ndim != new_grid.ndim:
        return None
    if not np.allclose(og.spacing, new_grid.spacing, rtol=1e-12, atol=0.0):
        return None
    offsets = []
    for ax in range(og.ndim):
        off = (og.axes[ax][0] - new_grid.axes[ax][0]) / new_grid.spacing[ax]
        k = round(off)
        if abs(off - k) > 1e-9 or k < 0 or k + og.n > new_grid.n:
            return None
        offsets.append(k)
    block = tuple(slice(k, k + og.n) for k in offsets)

    def lift(field):
        full = np.zeros(new_grid.shape)
        full[block] = og.embed(field.values)
        return ScalarField(new_grid, full[new_grid.mask])

    return State(lift(old.u), tuple(lift(w) for w in old.v))


def solve_whole_space(mdl: ModelSpec, cfg: SolverConfig, *,
                      nodes_per_axis: int) -> GroundStateReport:
    """Approximate the whole-space problem by solves on doubling domains.

    Spacing is held fixed while the domain doubles, so the admissible sets
    are nested and the attained energies are non-increasing.  Stops when two
    consecutive stages agree to ``cfg.box_tol`` relative; raises
    ``NoBoxConvergence`` after ``cfg.max_doublings`` doublings otherwise.
    """
    if not cfg.box_doubling:
        raise ValueError("solve_whole_space requires cfg.box_doubling")
    diag = trap_diagnostics(mdl)
    if diag.certifiable is False:
        warnings.warn(
            "potentials do not certify existence on the whole space "
            "(no trap gap); box-doubling result is diagnostic", stacklevel=2)

    domain = mdl.domain
    nodes = int(nodes_per_axis)
    report = solve_ground_state(replace(mdl, domain=domain), cfg,
                                nodes_per_axis=nodes)
    sequence = [(domain.extents[0], report.c)]
    for _ in range(cfg.max_doublings):
        domain = domain.doubled()
        nodes = 2 * (nodes - 1) + 1
        grid = build_grid(domain, nodes)
        init = _embed_state(report.state, grid) if report.converged else None
        stage_mdl = replace(mdl, domain=domain)
        if init is not None:
            next_report = solve_ground_state(stage_mdl, cfg, init=init)
        else:
            next_report = solve_ground_state(stage_mdl, cfg, grid=grid)
        sequence.append((domain.extents[0], next_report.c))
        prev_c = report.c
        report = next_report
        if abs(prev_c - report.c) <= cfg.box_tol * abs(prev_c):
            return replace(report, box_sequence=tuple(sequence))
    raise NoBoxConvergence(
        f"energies did not settle within {cfg.max_doublings} doublings",
        sequence)


def max_workers() -> int:
    """Parallelism for independent solves; SBS_THREADS overrides."""
    env = os.environ.get("SBS_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


@dataclass(frozen=True)
class CMapEntry:
    point: tuple
    c: float
    status: str


@dataclass(frozen=True)
class CMapResult:
    """Pointwise ground-energy map and its argmin (lexicographic tie-break)."""

    entries: tuple
    argmin: tuple


def c_map(mdl: ModelSpec, sample_points, cfg: SolverConfig, *,
          nodes_per_axis: int, base_half_width: float = 8.0) -> CMapResult:
    """Ground energy of the frozen-coefficient whole-space problem per point.

    For each sample ``x`` the potentials are replaced by the constants
    ``V1(x)``, ``V2(x)`` and the problem is solved at unit epsilon on a
    doubling box.  Failed points are flagged, not fatal.
    """
    points = [tuple(float(c) for c in np.atleast_1d(p)) for p in sample_points]
    ndim = mdl.domain.dimension
    box = DomainSpec("box", ndim, (base_half_width,) * ndim)
    run_cfg = replace(cfg, box_doubling=True)

    def run_point(point):
        lam1 = mdl.V1.value_at(point)
        lam2 = mdl.V2.value_at(point)
        frozen = replace(mdl, epsilon=1.0, domain=box,
                         V1=PotentialSpec.constant(lam1),
                         V2=PotentialSpec.constant(lam2))
        try:
            rep = solve_whole_space(frozen, run_cfg, nodes_per_axis=nodes_per_axis)
        except (InitFailed, NotProjectable):
            return CMapEntry(point, math.nan, "collapsed")
        except NoBoxConvergence:
            return CMapEntry(point, math.nan, "failed")
        status = "converged" if rep.converged else "failed"
        return CMapEntry(point, rep.c, status)

    with ThreadPoolExecutor(max_workers=max_workers()) as pool:
        entries = list(pool.map(run_point, points))
    good = [e for e in entries if e.status == "converged"]
    argmin = min(good, key=lambda e: (e.c, e.point)).point if good else None
    return CMapResult(entries=tuple(entries), argmin=argmin)
