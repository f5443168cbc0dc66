"""Prediction maps as binary PPM (P6) images, one pixel per grid cell."""

from __future__ import annotations

from pathlib import Path

import numpy as np

# label -> RGB; 0 blue, 1 light blue, 2 green, then further distinct colors
PALETTE = (
    (0, 0, 255),
    (135, 206, 250),
    (0, 128, 0),
    (255, 0, 0),
    (255, 255, 0),
    (255, 165, 0),
    (128, 0, 128),
    (128, 128, 128),
    (255, 255, 255),
    (0, 0, 0),
)


class RenderError(ValueError):
    pass


def ppm_bytes(grid, palette=PALETTE) -> bytes:
    g = np.asarray(grid)
    if g.ndim != 2 or g.shape[0] < 1 or g.shape[1] < 1:
        raise RenderError("prediction grid must be a non-empty 2-D array")
    if not np.issubdtype(g.dtype, np.integer):
        if not np.all(np.equal(np.mod(g, 1), 0)):
            raise RenderError("prediction grid must hold integer labels")
        g = g.astype(np.int64)
    pal = np.asarray(palette, dtype=np.uint8)
    if g.min() < 0 or g.max() >= len(pal):
        bad = int(g.min()) if g.min() < 0 else int(g.max())
        raise RenderError(f"label {bad} outside the palette of {len(pal)} colors")
    h, w = g.shape
    return f"P6\n{w} {h}\n255\n".encode("ascii") + pal[g].tobytes()


def render_prediction_map(grid, out_path, palette=PALETTE) -> None:
    Path(out_path).write_bytes(ppm_bytes(grid, palette))


def read_ppm(path) -> np.ndarray:
    """Parse a P6 file written by :func:`render_prediction_map` into an (h, w, 3) array."""
    raw = Path(path).read_bytes()
    parts = raw.split(b"\n", 3)
    if len(parts) != 4 or parts[0] != b"P6":
        raise RenderError("not a P6 image")
    w, h = (int(v) for v in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w, 3)


def grid_points(xmin: float, xmax: float, ymin: float, ymax: float, width: int, height: int) -> np.ndarray:
    """Cell-center coordinates, row-major with row 0 at the top (largest y)."""
    if width < 1 or height < 1:
        raise RenderError("grid width and height must be >= 1")
    xs = xmin + (np.arange(width) + 0.5) * (xmax - xmin) / width
    ys = ymax - (np.arange(height) + 0.5) * (ymax - ymin) / height
    gx, gy = np.meshgrid(xs, ys)
    return np.column_stack([gx.ravel(), gy.ravel()])
