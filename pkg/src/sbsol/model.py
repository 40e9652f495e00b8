"""Physical parameters, energy forms, constraint algebra and residuals.

The system couples one ``u`` component to ``m`` identical-parameter ``v``
components through an attractive cross term.  With

    A = integral of eps^2|grad u|^2 + V1 u^2 + sum_j (eps^2|grad v_j|^2 + V2 v_j^2)
    B = integral of 2*beta u^2 sum_j v_j^2 + mu1 u^4 + mu2 sum_j v_j^4

the energy is ``E = A/2 - B/4`` and the constraint residual is ``G = A - B``.
States with ``G = 0`` form the constraint set on which least-energy solutions
are sought; there ``E = A/4`` and the scale-invariant quotient ``J = A^2/(4B)``
equals the maximum of ``E`` along the ray ``t -> (sqrt(t) u, sqrt(t) v)``.

Sign conventions: the stationarity residuals are

    r_u   = eps^2 lap u - V1 u + mu1 u^3 + beta u sum_j v_j^2
    r_vj  = eps^2 lap v_j - V2 v_j + mu2 v_j^3 + beta u^2 v_j

and the first variation of ``E`` along ``(du, dv)`` is
``-integral(r_u du) - sum_j integral(r_vj dv_j)`` (checked against centered
finite differences of ``E``), so ``+r`` is the descent direction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GridMismatch, InvalidPotential, NotProjectable
from .grid import (DomainSpec, Grid, ScalarField, _dirichlet_raw, sample_field)

POTENTIAL_KINDS = ("constant", "harmonic", "tabulated")


@dataclass(frozen=True)
class PotentialSpec:
    """Trapping potential: a positive constant, an offset harmonic well
    ``lam + sum_k a_k (x_k - z_k)^2``, or a tabulated field.

    ``lam`` is the value of a constant potential and the additive offset of a
    harmonic one (offset 0 gives the pure quadratic well).  The evaluated
    potential must be strictly positive at every interior node.
    """

    kind: str
    lam: float = 0.0
    a: tuple = ()
    center: tuple = ()
    table: ScalarField = None

    def __post_init__(self):
        if self.kind not in POTENTIAL_KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}")
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "a", tuple(float(x) for x in self.a))
        object.__setattr__(self, "center", tuple(float(x) for x in self.center))
        if self.kind == "constant" and self.lam <= 0.0:
            raise InvalidPotential("constant potential must be positive")
        if self.kind == "harmonic":
            if self.lam < 0.0:
                raise InvalidPotential("harmonic offset must be >= 0")
            if any(ak < 0.0 for ak in self.a):
                raise InvalidPotential("harmonic curvatures must be >= 0")
        if self.kind == "tabulated" and self.table is None:
            raise InvalidPotential("tabulated potential needs a field")

    @classmethod
    def constant(cls, lam):
        return cls("constant", lam=lam)

    @classmethod
    def harmonic(cls, a, center, lam=0.0):
        return cls("harmonic", lam=lam, a=a, center=center)

    @classmethod
    def tabulated(cls, field):
        return cls("tabulated", table=field)

    def _axis_params(self, ndim):
        a = self.a or (0.0,) * ndim
        z = self.center or (0.0,) * ndim
        if len(a) != ndim or len(z) != ndim:
            raise InvalidPotential("harmonic parameters must match the dimension")
        return a, z

    def value_at(self, point) -> float:
        """Pointwise evaluation (interpolated for tabulated potentials)."""
        p = np.atleast_1d(np.asarray(point, dtype=float))
        if self.kind == "constant":
            return self.lam
        if self.kind == "harmonic":
            a, z = self._axis_params(p.size)
            return self.lam + float(sum(ak * (x - zk) ** 2
                                        for ak, x, zk in zip(a, p, z)))
        return float(sample_field(self.table.grid, self.table, p[None, :])[0])

    def bounds(self):
        """Infimum over space and limit at infinity ``(b0, binf)``.

        Analytic for constant/harmonic; a tabulated potential reports its
        node minimum and an unknown (``None``) limit.
        """
        if self.kind == "constant":
            return self.lam, self.lam
        if self.kind == "harmonic":
            binf = math.inf if any(ak > 0.0 for ak in self.a) else self.lam
            return self.lam, binf
        return float(self.table.values.min()), None


def eval_potential(p: PotentialSpec, g: Grid) -> ScalarField:
    """Evaluate a potential on the interior nodes; must be strictly positive."""
    if p.kind == "constant":
        values = np.full(g.interior_count, p.lam)
    elif p.kind == "harmonic":
        a, z = p._axis_params(g.ndim)
        x = g.coords
        values = np.full(g.interior_count, p.lam)
        for ax in range(g.ndim):
            if a[ax] != 0.0:
                values = values + a[ax] * (x[:, ax] - z[ax]) ** 2
    else:
        if p.table.grid != g:
            raise GridMismatch("tabulated potential lives on a different grid")
        values = p.table.values
    if values.min() <= 0.0:
        raise InvalidPotential("potential must be strictly positive on the interior")
    return ScalarField(g, values)


@dataclass(frozen=True)
class ModelSpec:
    """Coupling parameters, potentials and domain for one problem instance."""

    epsilon: float
    beta: float
    mu1: float
    mu2: float
    m: int
    V1: PotentialSpec
    V2: PotentialSpec
    domain: DomainSpec

    def __post_init__(self):
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")
        if self.mu1 > 0.0 or self.mu2 > 0.0:
            raise ValueError("mu1 and mu2 must be <= 0")
        if self.m < 1:
            raise ValueError("m must be >= 1")

    @property
    def coupling_threshold(self) -> float:
        return math.sqrt(self.mu1 * self.mu2)

    @property
    def supercritical(self) -> bool:
        """Whether beta exceeds the existence threshold sqrt(mu1*mu2)."""
        return self.beta > self.coupling_threshold


@dataclass(frozen=True)
class TrapDiagnostics:
    """Potential infima/limits and whether the trap comparison can certify
    existence on the whole space (None when a tabulated limit is unknown)."""

    b1_0: float
    b1_inf: float
    b2_0: float
    b2_inf: float
    certifiable: bool


def trap_diagnostics(mdl: ModelSpec) -> TrapDiagnostics:
    b1_0, b1_inf = mdl.V1.bounds()
    b2_0, b2_inf = mdl.V2.bounds()
    if b1_inf is None or b2_inf is None:
        cert = None
    elif math.isinf(b1_inf) or math.isinf(b2_inf):
        cert = True
    else:
        cert = (b1_0 < b1_inf) and (b2_0 < b2_inf)
    return TrapDiagnostics(b1_0, b1_inf, b2_0, b2_inf, cert)


@dataclass(frozen=True)
class State:
    """The component pair ``(u, v_1..v_m)`` on one grid.

    Admissible minimization candidates are nonnegative; the solver enforces
    this by clamping, the type itself does not (arbitrary-sign fields are
    needed for directional-derivative checks).
    """

    u: ScalarField
    v: tuple

    def __post_init__(self):
        object.__setattr__(self, "v", tuple(self.v))
        for w in self.v:
            if w.grid != self.u.grid:
                raise GridMismatch("all components must share one grid")

    @property
    def grid(self) -> Grid:
        return self.u.grid

    def scale(self, c: float) -> "State":
        c = float(c)
        return State(self.u * c, tuple(w * c for w in self.v))

    def clamped(self) -> "State":
        g = self.grid
        return State(ScalarField(g, np.maximum(self.u.values, 0.0)),
                     tuple(ScalarField(g, np.maximum(w.values, 0.0))
                           for w in self.v))

    def max_abs(self) -> float:
        peak = float(np.abs(self.u.values).max())
        for w in self.v:
            peak = max(peak, float(np.abs(w.values).max()))
        return peak


@dataclass(frozen=True)
class FormsReport:
    """Quadratic form A, quartic form B, energy E = A/2 - B/4, residual G = A - B."""

    A: float
    B: float
    E: float
    G: float


class FormsEvaluator:
    """Evaluates forms and residuals with potentials cached on one grid.

    All reductions use a fixed summation order, so repeated evaluation of the
    same state is bit-reproducible.
    """

    def __init__(self, mdl: ModelSpec, grid: Grid):
        if grid.domain != mdl.domain:
            raise GridMismatch("grid does not discretize the model's domain")
        self.mdl = mdl
        self.grid = grid
        self.v1 = eval_potential(mdl.V1, grid).values
        self.v2 = eval_potential(mdl.V2, grid).values
        self.vol = grid.cell_volume
        self.eps2 = mdl.epsilon**2

    # raw-array layer used by the solver's inner loop

    def _dirichlet(self, a, b=None):
        full_a = self.grid.embed(a)
        full_b = full_a if b is None else self.grid.embed(b)
        return _dirichlet_raw(self.grid, full_a, full_b)

    def quadratic_raw(self, u, vs) -> float:
        A = self.eps2 * self._dirichlet(u) + self.vol * float(np.sum(self.v1 * u * u))
        for w in vs:
            A += self.eps2 * self._dirichlet(w)
            A += self.vol * float(np.sum(self.v2 * w * w))
        return A

    def quartic_raw(self, u, vs) -> float:
        mdl = self.mdl
        u2 = u * u
        B = 0.0
        for w in vs:
            w2 = w * w
            B += 2.0 * mdl.beta * float(np.sum(u2 * w2))
            B += mdl.mu2 * float(np.sum(w2 * w2))
        B += mdl.mu1 * float(np.sum(u2 * u2))
        return self.vol * B

    def forms_raw(self, u, vs):
        return self.quadratic_raw(u, vs), self.quartic_raw(u, vs)

    def _laplacian_raw(self, a):
        g = self.grid
        full = g.embed(a)
        pad = np.pad(full, 1)
        out = np.zeros_like(full)
        inner = slice(1, -1)
        for ax, h in enumerate(g.spacing):
            lo = tuple(inner if i != ax else slice(0, -2) for i in range(g.ndim))
            hi = tuple(inner if i != ax else slice(2, None) for i in range(g.ndim))
            out += (pad[lo] + pad[hi] - 2.0 * full) / (h * h)
        return g.restrict(out)

    def residual_raw(self, u, vs):
        mdl = self.mdl
        u2 = u * u
        vsum2 = np.zeros_like(u)
        for w in vs:
            vsum2 = vsum2 + w * w
        ru = (self.eps2 * self._laplacian_raw(u) - self.v1 * u
              + mdl.mu1 * u2 * u + mdl.beta * u * vsum2)
        rvs = [(self.eps2 * self._laplacian_raw(w) - self.v2 * w
                + mdl.mu2 * (w * w) * w + mdl.beta * u2 * w)
               for w in vs]
        return ru, rvs

    def residual_norm_raw(self, u, vs, ru=None, rvs=None) -> float:
        if ru is None:
            ru, rvs = self.residual_raw(u, vs)
        den = float(np.sum(u * u))
        for w in vs:
            den += float(np.sum(w * w))
        if den == 0.0:
            return 0.0
        den = math.sqrt(self.vol * den)
        worst = math.sqrt(self.vol * float(np.sum(ru * ru)))
        for r in rvs:
            worst = max(worst, math.sqrt(self.vol * float(np.sum(r * r))))
        return worst / den

    # State layer

    def _unpack(self, s: State):
        if s.grid != self.grid:
            raise GridMismatch("state does not live on the evaluator's grid")
        if len(s.v) != self.mdl.m:
            raise ValueError(f"state has {len(s.v)} v components, model wants {self.mdl.m}")
        return s.u.values, [w.values for w in s.v]

    def forms(self, s: State) -> FormsReport:
        u, vs = self._unpack(s)
        A, B = self.forms_raw(u, vs)
        return FormsReport(A=A, B=B, E=A / 2.0 - B / 4.0, G=A - B)

    def project(self, s: State):
        u, vs = self._unpack(s)
        A, B = self.forms_raw(u, vs)
        if B <= 0.0:
            raise NotProjectable(
                "quartic form is not positive; no scaling reaches the constraint set")
        t0 = A / B
        return s.scale(math.sqrt(t0)), t0

    def quotient(self, s: State) -> float:
        u, vs = self._unpack(s)
        A, B = self.forms_raw(u, vs)
        if B <= 0.0:
            raise NotProjectable(
                "quartic form is not positive; quotient undefined")
        return A * A / (4.0 * B)

    def residual(self, s: State):
        u, vs = self._unpack(s)
        ru, rvs = self.residual_raw(u, vs)
        g = self.grid
        return ScalarField(g, ru), [ScalarField(g, r) for r in rvs]

    def residual_norm(self, s: State) -> float:
        u, vs = self._unpack(s)
        return self.residual_norm_raw(u, vs)

    def directional_derivative(self, s: State, du: ScalarField, dv) -> float:
        """First variation of E along ``(du, dv)``; equals minus the residual
        pairing and matches centered finite differences of ``energy``."""
        u, vs = self._unpack(s)
        ru, rvs = self.residual_raw(u, vs)
        total = float(np.sum(ru * du.values))
        for r, d in zip(rvs, dv):
            total += float(np.sum(r * d.values))
        return -self.vol * total


# spec-level operations (transient evaluator per call)

def quadratic_form(s: State, mdl: ModelSpec) -> float:
    return FormsEvaluator(mdl, s.grid).forms(s).A


def quartic_form(s: State, mdl: ModelSpec) -> float:
    return FormsEvaluator(mdl, s.grid).forms(s).B


def energy(s: State, mdl: ModelSpec) -> FormsReport:
    return FormsEvaluator(mdl, s.grid).forms(s)


def nehari_project(s: State, mdl: ModelSpec):
    """Scale ``s`` onto the constraint set: ``t0 = A/B``, state ``sqrt(t0) s``."""
    return FormsEvaluator(mdl, s.grid).project(s)


def quotient_objective(s: State, mdl: ModelSpec) -> float:
    """Scale-invariant merit ``J = A^2/(4B)``; equals E after projection."""
    return FormsEvaluator(mdl, s.grid).quotient(s)


def euler_lagrange_residual(s: State, mdl: ModelSpec):
    """Pointwise stationarity residuals ``(r_u, [r_v1, ...])``."""
    return FormsEvaluator(mdl, s.grid).residual(s)


def residual_norm(s: State, mdl: ModelSpec) -> float:
    """max over components of ||r||_L2, normalized by the state's L2 norm."""
    return FormsEvaluator(mdl, s.grid).residual_norm(s)


def energy_directional_derivative(s: State, mdl: ModelSpec, du, dv) -> float:
    return FormsEvaluator(mdl, s.grid).directional_derivative(s, du, dv)
