"""Plain-text run configuration: ``key = value`` lines with ``#`` comments.

Keys are dotted paths; unknown keys are rejected with the offending line
number.  Every key has a default, so a minimal config can be empty.  Parsing
normalizes values (canonical float formatting, all keys present), and
``serialize_config`` emits the normalized form, so parse -> serialize ->
parse is the identity on normalized configs.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

from ..errors import ConfigError
from ..fieldio import field_from_sbsf
from ..grid import DomainSpec, Grid, build_grid
from ..model import ModelSpec, PotentialSpec
from ..solver import SolverConfig

_FLOAT, _INT, _BOOL, _STR, _FLOATS, _STRS = range(6)

_POTENTIAL_KEYS = ("kind", "lambda", "a", "center", "path")

# canonical key order; values are (type, default)
SCHEMA = {
    "model.epsilon": (_FLOAT, 1.0),
    "model.beta": (_FLOAT, 1.0),
    "model.mu1": (_FLOAT, 0.0),
    "model.mu2": (_FLOAT, 0.0),
    "model.m": (_INT, 1),
    "model.v1.kind": (_STR, "constant"),
    "model.v1.lambda": (_FLOAT, 1.0),
    "model.v1.a": (_FLOATS, ()),
    "model.v1.center": (_FLOATS, ()),
    "model.v1.path": (_STR, ""),
    "model.v2.kind": (_STR, "constant"),
    "model.v2.lambda": (_FLOAT, 1.0),
    "model.v2.a": (_FLOATS, ()),
    "model.v2.center": (_FLOATS, ()),
    "model.v2.path": (_STR, ""),
    "domain.kind": (_STR, "box"),
    "domain.dimension": (_INT, 1),
    "domain.extents": (_FLOATS, (20.0,)),
    "domain.center": (_FLOATS, ()),
    "grid.nodes_per_axis": (_INT, 801),
    "solver.max_iters": (_INT, 30000),
    "solver.tol_energy": (_FLOAT, 1e-9),
    "solver.tol_residual": (_FLOAT, 1e-6),
    "solver.step0": (_FLOAT, 1.0),
    "solver.backtrack": (_FLOAT, 0.5),
    "solver.seed": (_INT, 0),
    "solver.box_doubling": (_BOOL, False),
    "solver.box_tol": (_FLOAT, 1e-6),
    "solver.max_doublings": (_INT, 3),
    "solver.allow_subcritical": (_BOOL, False),
    "output.dir": (_STR, "out"),
    "output.figures": (_BOOL, True),
    "sweep.axes": (_STRS, ()),
    "sweep.cap": (_INT, 4096),
    "verify.suite": (_STR, ""),
}

SWEEP_AXES = ("epsilon", "beta", "mu1", "mu2", "v1.lambda", "v2.lambda")
_AXIS_TO_KEY = {
    "epsilon": "model.epsilon", "beta": "model.beta", "mu1": "model.mu1",
    "mu2": "model.mu2", "v1.lambda": "model.v1.lambda",
    "v2.lambda": "model.v2.lambda",
}


def _parse_value(kind, text, line):
    text = text.strip()
    try:
        if kind == _FLOAT:
            return float(text)
        if kind == _INT:
            return int(text)
        if kind == _BOOL:
            low = text.lower()
            if low in ("true", "false"):
                return low == "true"
            raise ValueError(text)
        if kind == _STR:
            return text
        if kind == _FLOATS:
            if not text:
                return ()
            return tuple(float(p.strip()) for p in text.split(","))
        if not text:
            return ()
        return tuple(p.strip() for p in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"cannot parse value {text!r}: {exc}", line) from None


def _format_value(kind, value):
    if kind == _FLOAT:
        return format(value, ".17g")
    if kind == _INT:
        return str(value)
    if kind == _BOOL:
        return "true" if value else "false"
    if kind == _STR:
        return value
    if kind == _FLOATS:
        return ", ".join(format(v, ".17g") for v in value)
    return ", ".join(value)


class RunConfig:
    """Normalized key/value store for one run (all schema keys present)."""

    def __init__(self, entries=None, sweep_values=None):
        base = {key: default for key, (_, default) in SCHEMA.items()}
        if entries:
            base.update(entries)
        self.entries = base
        self.sweep_values = dict(sweep_values or {})
        self.base_dir = "."

    def get(self, key):
        return self.entries[key]

    def replaced(self, **updates) -> "RunConfig":
        """New config with dotted keys updated (underscores are not mangled)."""
        out = RunConfig(dict(self.entries), dict(self.sweep_values))
        out.base_dir = self.base_dir
        for key, value in updates.items():
            if key not in SCHEMA:
                raise KeyError(key)
            out.entries[key] = value
        return out

    def with_key(self, key, value) -> "RunConfig":
        if key not in SCHEMA:
            raise KeyError(key)
        out = RunConfig(dict(self.entries), dict(self.sweep_values))
        out.base_dir = self.base_dir
        out.entries[key] = value
        return out

    def __eq__(self, other):
        return (isinstance(other, RunConfig)
                and self.entries == other.entries
                and self.sweep_values == other.sweep_values)

    __hash__ = None


def parse_config(text: str, base_dir: str = ".") -> RunConfig:
    entries = {}
    sweep_values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", lineno)
        key, _, value = line.partition("=")
        key = key.strip()
        if key in SCHEMA:
            entries[key] = _parse_value(SCHEMA[key][0], value, lineno)
        elif key.startswith("sweep.values."):
            axis = key[len("sweep.values."):]
            if axis not in SWEEP_AXES:
                raise ConfigError(
                    f"unknown sweep axis {axis!r} (allowed: {', '.join(SWEEP_AXES)})",
                    lineno)
            sweep_values[axis] = _parse_value(_FLOATS, value, lineno)
        else:
            raise ConfigError(f"unknown key {key!r}", lineno)
    cfg = RunConfig(entries, sweep_values)
    cfg.base_dir = base_dir
    _validate(cfg)
    return cfg


def parse_config_file(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, base_dir=os.path.dirname(os.path.abspath(path)))


def serialize_config(cfg: RunConfig) -> str:
    lines = []
    for key, (kind, _) in SCHEMA.items():
        lines.append(f"{key} = {_format_value(kind, cfg.entries[key])}")
    for axis in SWEEP_AXES:
        if axis in cfg.sweep_values:
            lines.append(
                f"sweep.values.{axis} = "
                f"{_format_value(_FLOATS, cfg.sweep_values[axis])}")
    return "\n".join(lines) + "\n"


def _validate(cfg: RunConfig):
    for key in ("model.v1.kind", "model.v2.kind"):
        if cfg.get(key) not in ("constant", "harmonic", "tabulated"):
            raise ConfigError(f"{key} must be constant, harmonic or tabulated")
    if cfg.get("domain.kind") not in ("box", "ball"):
        raise ConfigError("domain.kind must be box or ball")
    for axis in cfg.get("sweep.axes"):
        if axis not in SWEEP_AXES:
            raise ConfigError(
                f"unknown sweep axis {axis!r} (allowed: {', '.join(SWEEP_AXES)})")


@dataclass(frozen=True)
class ProblemSetup:
    """Everything a solve needs, materialized from a RunConfig."""

    model: ModelSpec
    grid: Grid
    solver: SolverConfig
    out_dir: str
    figures: bool
    whole_space: bool
    nodes_per_axis: int


def _potential_from_config(cfg: RunConfig, which: str, grid: Grid,
                           dimension: int) -> PotentialSpec:
    prefix = f"model.{which}."
    kind = cfg.get(prefix + "kind")
    lam = cfg.get(prefix + "lambda")
    try:
        if kind == "constant":
            return PotentialSpec.constant(lam)
        if kind == "harmonic":
            a = cfg.get(prefix + "a") or (0.0,) * dimension
            center = cfg.get(prefix + "center") or (0.0,) * dimension
            return PotentialSpec.harmonic(a, center, lam=lam)
        path = cfg.get(prefix + "path")
        if not path:
            raise ConfigError(f"{prefix}path is required for tabulated potentials")
        if not os.path.isabs(path):
            path = os.path.join(cfg.base_dir, path)
        return PotentialSpec.tabulated(field_from_sbsf(grid, path))
    except (ValueError, OSError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid potential model.{which}: {exc}") from exc


def build_problem(cfg: RunConfig) -> ProblemSetup:
    try:
        dim = cfg.get("domain.dimension")
        extents = cfg.get("domain.extents")
        if cfg.get("domain.kind") == "box" and len(extents) == 1 and dim > 1:
            extents = extents * dim
        center = cfg.get("domain.center") or (0.0,) * dim
        domain = DomainSpec(cfg.get("domain.kind"), dim, extents, center)
        nodes = cfg.get("grid.nodes_per_axis")
        grid = build_grid(domain, nodes)
    except ValueError as exc:
        raise ConfigError(f"invalid domain/grid: {exc}") from exc
    v1 = _potential_from_config(cfg, "v1", grid, dim)
    v2 = _potential_from_config(cfg, "v2", grid, dim)
    try:
        model = ModelSpec(cfg.get("model.epsilon"), cfg.get("model.beta"),
                          cfg.get("model.mu1"), cfg.get("model.mu2"),
                          cfg.get("model.m"), v1, v2, domain)
        solver = SolverConfig(
            max_iters=cfg.get("solver.max_iters"),
            tol_energy=cfg.get("solver.tol_energy"),
            tol_residual=cfg.get("solver.tol_residual"),
            step0=cfg.get("solver.step0"),
            backtrack=cfg.get("solver.backtrack"),
            seed=cfg.get("solver.seed"),
            box_doubling=cfg.get("solver.box_doubling"),
            box_tol=cfg.get("solver.box_tol"),
            max_doublings=cfg.get("solver.max_doublings"),
            allow_subcritical=cfg.get("solver.allow_subcritical"))
    except ValueError as exc:
        raise ConfigError(f"invalid model/solver parameters: {exc}") from exc
    return ProblemSetup(model=model, grid=grid, solver=solver,
                        out_dir=cfg.get("output.dir"),
                        figures=cfg.get("output.figures"),
                        whole_space=cfg.get("solver.box_doubling"),
                        nodes_per_axis=cfg.get("grid.nodes_per_axis"))


def apply_axis_value(cfg: RunConfig, axis: str, value: float) -> RunConfig:
    """One sweep-cell override applied to the model parameters."""
    return cfg.with_key(_AXIS_TO_KEY[axis], float(value))
