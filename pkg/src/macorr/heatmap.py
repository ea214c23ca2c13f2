"""Native grayscale heatmaps (binary PPM): no plotting dependency, headless."""

from __future__ import annotations

from pathlib import Path

import numpy as np


def write_heatmap(path: str | Path, values: np.ndarray) -> None:
    """Linear gray ramp over [min, max]; image dimensions equal the grid."""
    v = np.asarray(values, dtype=float)
    lo, hi = float(v.min()), float(v.max())
    if hi > lo:
        gray = np.round((v - lo) / (hi - lo) * 255.0).astype(np.uint8)
    else:
        gray = np.full(v.shape, 128, dtype=np.uint8)
    rgb = np.repeat(gray[:, :, None], 3, axis=2)
    with open(path, "wb") as fh:
        fh.write(f"P6\n{v.shape[1]} {v.shape[0]}\n255\n".encode("ascii"))
        fh.write(rgb.tobytes())
