"""Integration-by-parts decompositions of oscillatory matrix fields.

An oscillatory field  G0(lam x_axis)/lam * H  splits into a removable
symmetric gradient, a rank-one remainder of size O(1/lam), and a tail of
size O(lam^-(k+2)).  Iterating the antiderivative trick k times pushes the
non-removable part to order k; the coefficient fields below make the split
an exact identity rather than an estimate.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ParameterError
from .fields import (
    AffineVectorField,
    ScalarField,
    SymMatField2,
    VectorField2,
    derivative_stack,
    sup_norm,
    sym_grad,
)
from .profiles import TrigProfile, profile_field


def ibp_coefficients(
    h: SymMatField2, k: int, axis: int
) -> tuple[list[VectorField2], list[ScalarField]]:
    """Coefficient fields L_0..L_k and P_0..P_k of the order-k split.

    Axis 1:
        L_0 = (H11, 2 H12),                       P_0 = H22,
        L_i = (d1^i H11, 2 d1^i H12 + i d1^(i-1) d2 H11),
        P_i = 2 d1^(i-1) d2 H12 + (i-1) d1^(i-2) d2^2 H11.
    Axis 2 mirrors the roles of the coordinates and of H11/H22.
    """
    if k < 0:
        raise ParameterError("order k must be nonnegative")
    if axis == 1:
        diag, off = h.e11, h.e12
        along = lambda i, extra: (i, extra)  # derivative orders (d1, d2)
    elif axis == 2:
        diag, off = h.e22, h.e12
        along = lambda i, extra: (extra, i)
    else:
        raise ParameterError(f"axis must be 1 or 2, got {axis}")

    # one forward transform per entry serves every derivative order
    diag_orders = [along(i, 0) for i in range(k + 1)]
    diag_orders += [along(i - 1, 1) for i in range(1, k + 1)]
    diag_orders += [along(i - 2, 2) for i in range(2, k + 1)]
    d_diag = derivative_stack(diag, diag_orders)
    diag_plain = d_diag[: k + 1]
    diag_mix1 = d_diag[k + 1 : 2 * k + 1]
    diag_mix2 = d_diag[2 * k + 1 :]

    off_orders = [along(i, 0) for i in range(k + 1)]
    off_orders += [along(i - 1, 1) for i in range(1, k + 1)]
    d_off = derivative_stack(off, off_orders)
    off_plain = d_off[: k + 1]
    off_mix = d_off[k + 1 :]

    other_entry = h.e22 if axis == 1 else h.e11

    ls: list[VectorField2] = []
    ps: list[ScalarField] = []
    for i in range(k + 1):
        if i == 0:
            second = 2.0 * off_plain[0]
            p = other_entry
        else:
            second = 2.0 * off_plain[i] + float(i) * diag_mix1[i - 1]
            p = 2.0 * off_mix[i - 1]
            if i >= 2:
                p = p + float(i - 1) * diag_mix2[i - 2]
        if axis == 1:
            ls.append(VectorField2(diag_plain[i], second))
        else:
            ls.append(VectorField2(second, diag_plain[i]))
        ps.append(p)
    return ls, ps


@dataclass(frozen=True)
class IbpOutput:
    """The three summands reconstructing G0(lam x_axis)/lam * H.

    ``rank_one_axis`` is the direction of the non-removable remainder:
    e2 (x) e2 when the oscillation runs along x1, and vice versa.
    """

    w_correction: AffineVectorField
    rank_one_scalar: ScalarField
    tail: SymMatField2
    rank_one_axis: int

    def rank_one_matrix(self) -> SymMatField2:
        return SymMatField2.rank_one(self.rank_one_scalar, self.rank_one_axis)

    def reconstruction(self) -> SymMatField2:
        return self.tail + sym_grad(self.w_correction) + self.rank_one_matrix()


def ibp_decompose(
    h: SymMatField2, lam: int, gamma0: TrigProfile, k: int, axis: int
) -> IbpOutput:
    """Order-k integration-by-parts split of G0(lam x_axis)/lam * H.

    ``gamma0`` must be a pure zero-mean profile (every :class:`TrigProfile`
    is; a mean-one oscillation has to be passed via its zero-mean shift so
    the iterated primitives stay bounded).
    """
    if lam < 1:
        raise ParameterError(f"oscillation frequency must be >= 1, got {lam}")
    if not gamma0.is_zero_mean():
        raise ParameterError("ibp_decompose needs a zero-mean oscillation profile")
    grid = h.grid
    ls, ps = ibp_coefficients(h, k, axis)

    primitives = [gamma0]
    for _ in range(k + 1):
        primitives.append(primitives[-1].antiderivative())

    w_corr = VectorField2.zeros(grid)
    rank_one = ScalarField.zeros(grid)
    for i in range(k + 1):
        sign = -1.0 if i % 2 else 1.0
        osc_next = profile_field(grid, primitives[i + 1], lam, axis)
        w_corr = w_corr + (ls[i] * osc_next) * (sign / lam ** (i + 2))
        osc_i = profile_field(grid, primitives[i], lam, axis)
        rank_one = rank_one + (ps[i] * osc_i) * (sign / lam ** (i + 1))

    tail_sign = -1.0 if (k + 1) % 2 else 1.0
    osc_tail = profile_field(grid, primitives[k + 1], lam, axis)
    tail = (sym_grad(ls[k]) * osc_tail) * (tail_sign / lam ** (k + 2))

    return IbpOutput(
        w_correction=AffineVectorField.from_periodic(w_corr),
        rank_one_scalar=rank_one,
        tail=tail,
        rank_one_axis=2 if axis == 1 else 1,
    )


def ibp_residual(h: SymMatField2, lam: int, gamma0: TrigProfile, k: int, axis: int) -> float:
    """Relative sup-norm mismatch of the order-k decomposition identity."""
    out = ibp_decompose(h, lam, gamma0, k, axis)
    osc = profile_field(h.grid, gamma0, lam, axis)
    target = (h * osc) * (1.0 / lam)
    scale = max(sup_norm(target), sup_norm(out.rank_one_scalar))
    if scale == 0.0:
        return 0.0
    return sup_norm(target - out.reconstruction()) / scale
