"""Uniform tensor-product grids with homogeneous Dirichlet boundaries.

Domains are rectangular boxes or balls in one to three dimensions.  A ball is
realized as a masked bounding box: one code path serves both kinds, and any
stencil neighbor outside the interior reads as zero, consistent with the
Dirichlet condition.  Fields store values at interior nodes only.

The discrete operators are chosen to be mutually exact:

* ``laplacian_apply`` is the second-order central stencil with zero ghosts,
* ``integrate`` is the rectangle rule over interior nodes,
* ``grad_norm_sq`` is the Dirichlet form over axis-adjacent node pairs
  (including pairs against boundary zeros),

so that ``grad_norm_sq(g, f) == -integrate(g, f * laplacian_apply(g, f))``
holds to rounding for every field.  The energy forms build on this identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import GridMismatch, OutOfDomain

DOMAIN_KINDS = ("box", "ball")
MIN_NODES_PER_AXIS = 8


@dataclass(frozen=True)
class DomainSpec:
    """Rectangular box (per-axis half-widths) or ball (single radius).

    ``extents`` holds half-widths for a box (one per axis) and the radius for
    a ball (length one).  Dimension is restricted to 1, 2 or 3.
    """

    kind: str
    dimension: int
    extents: tuple
    center: tuple = ()

    def __post_init__(self):
        if self.kind not in DOMAIN_KINDS:
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.dimension not in (1, 2, 3):
            raise ValueError("dimension must be 1, 2 or 3")
        extents = tuple(float(e) for e in self.extents)
        if self.kind == "box" and len(extents) != self.dimension:
            raise ValueError("box needs one half-width per axis")
        if self.kind == "ball" and len(extents) != 1:
            raise ValueError("ball needs a single radius")
        if any(e <= 0.0 for e in extents):
            raise ValueError("extents must be strictly positive")
        center = tuple(float(c) for c in self.center) or (0.0,) * self.dimension
        if len(center) != self.dimension:
            raise ValueError("center must have one coordinate per axis")
        object.__setattr__(self, "extents", extents)
        object.__setattr__(self, "center", center)

    @property
    def half_widths(self):
        """Bounding-box half-widths, one per axis."""
        if self.kind == "box":
            return self.extents
        return (self.extents[0],) * self.dimension

    @property
    def radius(self):
        if self.kind != "ball":
            raise ValueError("radius is only defined for ball domains")
        return self.extents[0]

    def contains(self, point) -> bool:
        """Strict interior test."""
        p = np.asarray(point, dtype=float)
        c = np.asarray(self.center)
        if self.kind == "box":
            return bool(np.all(np.abs(p - c) < np.asarray(self.extents)))
        return bool(np.dot(p - c, p - c) < self.radius**2)

    def boundary_distance(self, point) -> float:
        """Signed distance to the boundary (negative outside)."""
        p = np.asarray(point, dtype=float)
        c = np.asarray(self.center)
        if self.kind == "box":
            return float(np.min(np.asarray(self.extents) - np.abs(p - c)))
        return float(self.radius - math.sqrt(float(np.dot(p - c, p - c))))

    @property
    def incenter_distance(self) -> float:
        """max over the domain of the distance to the boundary."""
        if self.kind == "box":
            return min(self.extents)
        return self.radius

    def doubled(self) -> "DomainSpec":
        return DomainSpec(self.kind, self.dimension,
                          tuple(2.0 * e for e in self.extents), self.center)


class Grid:
    """Uniform lattice over the bounding box of a domain.

    Nodes on the bounding-box faces are Dirichlet boundary nodes; for ball
    domains the interior mask additionally keeps only nodes strictly inside
    the ball.  Fields are stored as flat vectors over interior nodes in the
    C order of the full lattice.
    """

    def __init__(self, domain: DomainSpec, nodes_per_axis: int):
        n = int(nodes_per_axis)
        if n < MIN_NODES_PER_AXIS:
            raise ValueError(f"nodes_per_axis must be >= {MIN_NODES_PER_AXIS}")
        self.domain = domain
        self.n = n
        ndim = domain.dimension
        self.ndim = ndim
        self.shape = (n,) * ndim
        widths = domain.half_widths
        self.spacing = tuple(2.0 * w / (n - 1) for w in widths)
        self.axes = tuple(
            np.linspace(c - w, c + w, n)
            for c, w in zip(domain.center, widths)
        )
        self.mask = self._build_mask()
        self._flat_index = np.flatnonzero(self.mask.ravel())
        self.interior_count = int(self._flat_index.size)
        self.cell_volume = float(np.prod(self.spacing))
        self._coords = None

    def _build_mask(self):
        if self.domain.kind == "box":
            mask = np.zeros(self.shape, dtype=bool)
            mask[(slice(1, -1),) * self.ndim] = True
            return mask
        # ball: strict radius test; bounding-box faces fall outside automatically
        r2 = np.zeros(self.shape)
        for ax, (axis, c) in enumerate(zip(self.axes, self.domain.center)):
            sh = [1] * self.ndim
            sh[ax] = self.n
            r2 = r2 + ((axis - c) ** 2).reshape(sh)
        return r2 < self.domain.radius**2

    @property
    def coords(self):
        """Interior node coordinates, shape ``(interior_count, ndim)``."""
        if self._coords is None:
            mesh = np.meshgrid(*self.axes, indexing="ij")
            self._coords = np.stack([m[self.mask] for m in mesh], axis=-1)
        return self._coords

    def embed(self, values):
        """Scatter interior values into the full lattice (zeros elsewhere)."""
        full = np.zeros(self.shape)
        full.ravel()[self._flat_index] = values
        return full

    def restrict(self, full):
        """Gather interior values from a full-lattice array."""
        return full.ravel()[self._flat_index].copy()

    def node_index(self, flat_interior_index):
        """Full-lattice multi-index of the k-th interior node."""
        return np.unravel_index(self._flat_index[flat_interior_index], self.shape)

    def nearest_interior_index(self, point):
        """Index (into the interior vector) of the interior node closest to ``point``."""
        d2 = np.sum((self.coords - np.asarray(point, dtype=float)) ** 2, axis=1)
        return int(np.argmin(d2))

    def __eq__(self, other):
        return (isinstance(other, Grid)
                and self.domain == other.domain and self.n == other.n)

    __hash__ = None


class ScalarField:
    """One real value per interior node of a grid.  Values are immutable."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values):
        arr = np.array(values, dtype=float)
        if arr.shape != (grid.interior_count,):
            raise ValueError(
                f"field length {arr.shape} does not match interior count "
                f"{grid.interior_count}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("field values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", arr)

    def __setattr__(self, name, value):
        raise AttributeError("ScalarField is immutable")

    def _peer(self, other):
        if not isinstance(other, ScalarField):
            raise TypeError("expected a ScalarField")
        if other.grid != self.grid:
            raise GridMismatch("fields live on different grids")
        return other

    def __add__(self, other):
        return ScalarField(self.grid, self.values + self._peer(other).values)

    def __sub__(self, other):
        return ScalarField(self.grid, self.values - self._peer(other).values)

    def __mul__(self, other):
        if isinstance(other, ScalarField):
            return ScalarField(self.grid, self.values * self._peer(other).values)
        return ScalarField(self.grid, self.values * float(other))

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField(self.grid, -self.values)

    def max(self) -> float:
        return float(self.values.max())


def build_grid(domain: DomainSpec, nodes_per_axis: int) -> Grid:
    """Discretize ``domain`` with ``nodes_per_axis`` lattice nodes per axis."""
    return Grid(domain, nodes_per_axis)


def field_from_callable(grid: Grid, fn) -> ScalarField:
    """Evaluate ``fn`` on interior node coordinates (passed as ``(count, ndim)``)."""
    return ScalarField(grid, np.asarray(fn(grid.coords), dtype=float))


def _check_on_grid(g: Grid, f: ScalarField):
    if f.grid != g:
        raise GridMismatch("field does not live on the given grid")


def laplacian_apply(g: Grid, f: ScalarField) -> ScalarField:
    """Second-order central-difference Laplacian with zero ghost values."""
    _check_on_grid(g, f)
    full = g.embed(f.values)
    pad = np.pad(full, 1)
    out = np.zeros_like(full)
    inner = slice(1, -1)
    for ax, h in enumerate(g.spacing):
        lo = tuple(inner if i != ax else slice(0, -2) for i in range(g.ndim))
        hi = tuple(inner if i != ax else slice(2, None) for i in range(g.ndim))
        out += (pad[lo] + pad[hi] - 2.0 * full) / (h * h)
    return ScalarField(g, g.restrict(out))


def integrate(g: Grid, f: ScalarField) -> float:
    """Rectangle rule over interior nodes: ``h^N * sum(values)``."""
    _check_on_grid(g, f)
    return g.cell_volume * float(np.sum(f.values))


def dirichlet_form(g: Grid, f: ScalarField, w: ScalarField) -> float:
    """Bilinear Dirichlet form sum over axis-adjacent pairs of differences."""
    _check_on_grid(g, f)
    _check_on_grid(g, w)
    return _dirichlet_raw(g, g.embed(f.values), g.embed(w.values))


def _dirichlet_raw(g: Grid, full_f, full_w) -> float:
    same = full_f is full_w
    total = 0.0
    for ax, h in enumerate(g.spacing):
        width = [(0, 0)] * g.ndim
        width[ax] = (1, 1)
        df = np.diff(np.pad(full_f, width), axis=ax)
        dw = df if same else np.diff(np.pad(full_w, width), axis=ax)
        total += g.cell_volume / (h * h) * float(np.sum(df * dw))
    return total


def grad_norm_sq(g: Grid, f: ScalarField) -> float:
    """Discrete ``integral of |grad f|^2``; equals ``-integrate(f * lap f)`` exactly."""
    _check_on_grid(g, f)
    full = g.embed(f.values)
    return _dirichlet_raw(g, full, full)


def sample_field(g: Grid, f: ScalarField, points) -> np.ndarray:
    """Multilinear interpolation of ``f`` at points inside the bounding box.

    Non-interior lattice nodes contribute zeros, consistent with the Dirichlet
    extension of the field.  Points outside the bounding box raise
    ``OutOfDomain``.
    """
    _check_on_grid(g, f)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != g.ndim:
        raise ValueError("points must have one coordinate per axis")
    interp = RegularGridInterpolator(g.axes, g.embed(f.values),
                                     method="linear", bounds_error=True)
    try:
        return np.asarray(interp(pts), dtype=float)
    except ValueError as exc:
        raise OutOfDomain(str(exc)) from exc
