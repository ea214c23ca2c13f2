"""Single-codimension corrugation step and its exact residual identity.

One oscillatory perturbation of amplitude a/lam and frequency lam, added to
one codimension component, converts a rank-one defect a^2 e_i (x) e_i into
three lower-order error terms.  The step is an algebraic identity, so on
resolved inputs the residual is pure rounding.
"""

from __future__ import annotations

from .errors import ParameterError
from .fields import (
    AffineVectorField,
    ScalarField,
    SymMatField2,
    VectorField2,
    grad,
    hessian,
    metric_pullback,
    sup_norm,
    sym_grad,
)
from .profiles import GAMMA, GAMMA_BAR, GAMMA_DBAR, GAMMA_TILDE_M1, profile_field


def _validate_axes(i: int, k: int):
    if i not in (1, 2) or k not in (1, 2):
        raise ParameterError(f"oscillation axis and codimension must be 1 or 2, got i={i}, k={k}")


def corrugation_step(
    v: VectorField2,
    w: AffineVectorField,
    a: ScalarField,
    lam: int,
    i: int,
    k: int,
) -> tuple[VectorField2, AffineVectorField]:
    """Add the corrugation a/lam * (2 sin(lam x_i)) to component k of v.

    The matching perturbation of w removes every first-order coupling, so the
    new defect differs from the old one by a^2 e_i (x) e_i plus terms of size
    1/lam (see :func:`step_residual` for the exact bookkeeping).
    """
    _validate_axes(i, k)
    grid = v.grid
    osc = profile_field(grid, GAMMA, lam, i)
    osc_bar = profile_field(grid, GAMMA_BAR, lam, i)
    osc_dbar = profile_field(grid, GAMMA_DBAR, lam, i)

    a_osc = a * osc
    bump = a_osc * (1.0 / lam)
    if k == 1:
        v_new = VectorField2(v.c1 + bump, v.c2)
    else:
        v_new = VectorField2(v.c1, v.c2 + bump)

    gv_k = grad(v.component(k))
    ga = grad(a)
    corr = (
        (gv_k * a_osc) * (-1.0 / lam)
        + (ga * (a * osc_bar)) * (1.0 / lam ** 2)
    )
    ei_term = (a * (a * osc_dbar)) * (1.0 / lam)
    if i == 1:
        corr = corr + VectorField2(ei_term, ScalarField.zeros(grid))
    else:
        corr = corr + VectorField2(ScalarField.zeros(grid), ei_term)
    return v_new, w + corr


def step_error_terms(
    v: VectorField2, a: ScalarField, lam: int, i: int, k: int
) -> SymMatField2:
    """The predicted defect-difference error of one corrugation step:

        -(a/lam) G(lam x_i) hess(v^k) + (a/lam^2) Gbar(lam x_i) hess(a)
        + (1/lam^2) Gtilde(lam x_i) grad(a) (x) grad(a).
    """
    _validate_axes(i, k)
    grid = v.grid
    osc = profile_field(grid, GAMMA, lam, i)
    osc_bar = profile_field(grid, GAMMA_BAR, lam, i)
    tilde = 1.0 + profile_field(grid, GAMMA_TILDE_M1, lam, i)
    ga = grad(a)
    return (
        (hessian(v.component(k)) * (a * osc)) * (-1.0 / lam)
        + (hessian(a) * (a * osc_bar)) * (1.0 / lam ** 2)
        + (SymMatField2.outer(ga, ga) * tilde) * (1.0 / lam ** 2)
    )


def step_residual(
    v: VectorField2,
    w: AffineVectorField,
    a: ScalarField,
    lam: int,
    i: int,
    k: int,
) -> float:
    """Relative sup-norm mismatch of the corrugation-step identity.

    Both sides are evaluated independently: the left from the actual defect
    difference of the constructed fields, the right from the closed-form
    error terms.  Normalized by the larger of the two sides (zero if both
    vanish), which is stricter than normalizing by a^2.
    """
    v_new, w_new = corrugation_step(v, w, a, lam, i, k)
    lhs = (
        0.5 * metric_pullback(v_new)
        + sym_grad(w_new)
        - 0.5 * metric_pullback(v)
        - sym_grad(w)
        - SymMatField2.rank_one(a * a, i)
    )
    rhs = step_error_terms(v, a, lam, i, k)
    scale = max(sup_norm(lhs), sup_norm(rhs))
    if scale == 0.0:
        return 0.0
    return sup_norm(lhs - rhs) / scale
