"""Seeded band-limited random fields for test batteries and rate sweeps."""

from __future__ import annotations

import numpy as np

from .fields import Grid2, ScalarField, SymMatField2, VectorField2, _irfft2


def random_scalar(
    grid: Grid2,
    band: int,
    rng: np.random.Generator,
    sup: float = 1.0,
    zero_mean: bool = True,
    decay: float = 1.0,
) -> ScalarField:
    """Random trig polynomial with Gaussian spectral decay inside |k| <= band."""
    n = grid.n
    spec = np.zeros((n, n // 2 + 1), dtype=complex)
    k1 = np.fft.fftfreq(n, d=1.0 / n).reshape(-1, 1)
    k2 = np.arange(n // 2 + 1, dtype=float).reshape(1, -1)
    km = np.maximum(np.abs(k1), k2)
    mask = km <= band
    amp = np.exp(-decay * (km / max(band, 1)) ** 2)
    m = int(mask.sum())
    spec[mask] = (rng.standard_normal(m) + 1j * rng.standard_normal(m)) * amp[mask]
    if zero_mean:
        spec[0, 0] = 0.0
    vals = _irfft2(spec, n)
    peak = np.abs(vals).max()
    if peak > 0:
        vals *= sup / peak
    return ScalarField.from_values(grid, vals)


def random_vector(grid: Grid2, band: int, rng, sup: float = 1.0) -> VectorField2:
    return VectorField2(
        random_scalar(grid, band, rng, sup), random_scalar(grid, band, rng, sup)
    )


def random_symmat(grid: Grid2, band: int, rng, sup: float = 1.0) -> SymMatField2:
    return SymMatField2(
        random_scalar(grid, band, rng, sup),
        random_scalar(grid, band, rng, sup),
        random_scalar(grid, band, rng, sup),
    )
