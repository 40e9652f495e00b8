"""Binary field dumps.

Format (all little-endian):

* magic ``SBSF1`` (5 bytes)
* dimension N, unsigned 8-bit
* nodes per axis, 3 x unsigned 32-bit (unused axes written as 1)
* spacing per axis, 3 x IEEE-754 float64 (unused axes written as 1.0)
* full bounding-box values, row-major with the last axis fastest, float64;
  boundary and masked nodes are written as 0.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .grid import Grid, ScalarField

MAGIC = b"SBSF1"
_HEADER = struct.Struct("<5sB3I3d")


@dataclass(frozen=True)
class SbsfData:
    """A decoded field dump: bounding-box array plus lattice metadata."""

    ndim: int
    shape: tuple
    spacing: tuple
    values: np.ndarray


def field_to_bytes(g: Grid, f: ScalarField) -> bytes:
    nodes = list(g.shape) + [1] * (3 - g.ndim)
    spacing = list(g.spacing) + [1.0] * (3 - g.ndim)
    header = _HEADER.pack(MAGIC, g.ndim, *nodes, *spacing)
    body = np.ascontiguousarray(g.embed(f.values), dtype="<f8").tobytes()
    return header + body


def write_sbsf(path, g: Grid, f: ScalarField) -> None:
    with open(path, "wb") as fh:
        fh.write(field_to_bytes(g, f))


def read_sbsf(path) -> SbsfData:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise ValueError("truncated field dump")
    magic, ndim, n1, n2, n3, h1, h2, h3 = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError("not a field dump (bad magic)")
    if ndim not in (1, 2, 3):
        raise ValueError(f"unsupported dimension {ndim}")
    shape = (n1, n2, n3)[:ndim]
    spacing = (h1, h2, h3)[:ndim]
    count = int(np.prod(shape))
    body = raw[_HEADER.size:]
    if len(body) != 8 * count:
        raise ValueError("field dump payload size does not match header")
    values = np.frombuffer(body, dtype="<f8").reshape(shape).astype(float)
    return SbsfData(ndim=int(ndim), shape=shape, spacing=spacing, values=values)


def field_from_sbsf(g: Grid, path) -> ScalarField:
    """Load a dump produced on a grid with the same lattice as ``g``."""
    data = read_sbsf(path)
    if data.shape != g.shape:
        raise ValueError(
            f"dump lattice {data.shape} does not match grid lattice {g.shape}")
    if not np.allclose(data.spacing, g.spacing, rtol=1e-9, atol=0.0):
        raise ValueError("dump spacing does not match grid spacing")
    return ScalarField(g, data.values[g.mask])
