"""Diagonal defect decomposition: H + sym grad(Psi) = a * Id.

On the torus this is an exact per-frequency 3x3 solve (determinant
-|k|^2/2), so the decomposition is an identity up to rounding rather than
an elliptic estimate.  The zero mode cannot be matched by a periodic
potential: its trace-free part goes into the affine slot of Psi.
"""

from __future__ import annotations

import numpy as np

from .errors import ParameterError
from .fields import (
    AffineVectorField,
    Grid2,
    ScalarField,
    SymMatField2,
    VectorField2,
    _irfft2,
    _rfft2,
)


def diagonal_decompose(h: SymMatField2) -> tuple[AffineVectorField, ScalarField]:
    """Return (Psi, a) with  h + sym grad(Psi) = a * Id  to machine precision.

    For each frequency k != 0 the system
        sym(i k (x) Psi_hat) - a_hat * Id = -H_hat(k)
    has the unique solution
        a_hat  = (k2^2 H11 - 2 k1 k2 H12 + k1^2 H22) / |k|^2
        Psi1_hat = -i p,  Psi2_hat = -i q
    where k1 p = a_hat - H11, k2 q = a_hat - H22, k2 p + k1 q = -2 H12
    (degenerate axes handled separately).  The map is linear in h.
    """
    grid = h.grid
    n = grid.n
    s11 = _rfft2(h.e11.values)
    s12 = _rfft2(h.e12.values)
    s22 = _rfft2(h.e22.values)

    k1, k2 = grid.wavenumbers()
    k1 = np.broadcast_to(k1, s11.shape)
    k2 = np.broadcast_to(k2, s11.shape)
    ksq = k1 ** 2 + k2 ** 2
    nonzero = ksq > 0.0
    safe_ksq = np.where(nonzero, ksq, 1.0)

    a_hat = (k2 ** 2 * s11 - 2.0 * k1 * k2 * s12 + k1 ** 2 * s22) / safe_ksq

    # p = i Psi1_hat, q = i Psi2_hat
    both = nonzero & (k1 != 0.0) & (k2 != 0.0)
    only2 = nonzero & (k1 == 0.0)  # k2 != 0
    only1 = nonzero & (k2 == 0.0)  # k1 != 0
    safe_k1 = np.where(k1 != 0.0, k1, 1.0)
    safe_k2 = np.where(k2 != 0.0, k2, 1.0)

    p = np.zeros_like(s11)
    q = np.zeros_like(s11)
    p[both] = ((a_hat - s11) / safe_k1)[both]
    q[both] = ((a_hat - s22) / safe_k2)[both]
    p[only2] = (-2.0 * s12 / safe_k2)[only2]
    q[only2] = ((a_hat - s22) / safe_k2)[only2]
    p[only1] = ((a_hat - s11) / safe_k1)[only1]
    q[only1] = (-2.0 * s12 / safe_k1)[only1]

    psi1_hat = -1j * p
    psi2_hat = -1j * q

    # zero mode: a0 = tr(H0)/2; the trace-free remainder needs an affine map
    h0 = np.array(
        [[s11[0, 0].real, s12[0, 0].real], [s12[0, 0].real, s22[0, 0].real]]
    ) / (n * n)
    a0 = 0.5 * (h0[0, 0] + h0[1, 1])
    a_hat[0, 0] = a0 * n * n
    psi1_hat[0, 0] = 0.0
    psi2_hat[0, 0] = 0.0
    matrix = a0 * np.eye(2) - h0

    band = max(e.band for e in h.entries)
    band = min(band, grid.max_active_freq)
    a = ScalarField(grid, _irfft2(a_hat, n), band)
    periodic = VectorField2(
        ScalarField(grid, _irfft2(psi1_hat, n), band),
        ScalarField(grid, _irfft2(psi2_hat, n), band),
    )
    psi = AffineVectorField(matrix, np.zeros(2), periodic)
    return psi, a


def decomposition_residual(h: SymMatField2, psi: AffineVectorField, a: ScalarField) -> float:
    """sup |h + sym grad Psi - a Id| , relative to sup |h| (or absolute if h = 0)."""
    from .fields import sup_norm, sym_grad

    res = h + sym_grad(psi) - SymMatField2.scalar_identity(a)
    scale = sup_norm(h)
    r = sup_norm(res)
    return r / scale if scale > 0.0 else r
