"""Render 2D field dumps as 8-bit binary PGM images."""

from __future__ import annotations

import numpy as np

from ..fieldio import read_sbsf


def render_pgm(dump_path, out_path) -> None:
    """Linear map of [0, max] to [0, 255]; negative values clip to 0.

    Only 2D dumps are renderable; anything else raises ValueError.  Output
    bytes are a pure function of the dump, so re-rendering is byte-identical.
    """
    data = read_sbsf(dump_path)
    if data.ndim != 2:
        raise ValueError(f"can only render 2D dumps, got dimension {data.ndim}")
    values = np.maximum(data.values, 0.0)
    peak = float(values.max())
    if peak > 0.0:
        pixels = np.rint(values / peak * 255.0)
    else:
        pixels = np.zeros_like(values)
    pixels = np.clip(pixels, 0, 255).astype(np.uint8)
    height, width = pixels.shape
    with open(out_path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())
