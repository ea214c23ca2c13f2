"""Amplitude iteration canceling the non-oscillatory grad(a) (x) grad(a) error.

Repeated diagonal decomposition of H minus the current quadratic error
produces an amplitude a with a^2 = cbar*mu^gamma + (diagonal part), pinched
away from zero, whose residual

    F = a^2 Id + sym grad(Psi) - H + grad(a) (x) grad(a) / lam_bar^2

shrinks geometrically in the frequency gap lam_bar/mu.  The additive
cbar*mu^gamma floor is paid for by subtracting the same multiple of the
identity map from Psi.
"""

from __future__ import annotations

from dataclasses import dataclass

from .decompose import diagonal_decompose
from .errors import CalibrationError, ParameterError
from .fields import (
    AffineVectorField,
    ScalarField,
    SymMatField2,
    grad,
    sqrt_field,
    sup_norm,
    sym_grad,
)


@dataclass(frozen=True)
class KallenParams:
    """mu: input-frequency scale; lam_bar: target frequency; n_rounds: N."""

    mu: float
    lam_bar: float
    gamma: float
    n_rounds: int
    cbar: float
    positivity_floor: float = 1e-12

    def __post_init__(self):
        if not (self.lam_bar >= self.mu >= 1.0):
            raise ParameterError(f"need lam_bar >= mu >= 1, got mu={self.mu}, lam_bar={self.lam_bar}")
        if not (0.0 < self.gamma < 1.0):
            raise ParameterError(f"gamma must lie in (0,1), got {self.gamma}")
        if self.n_rounds < 1:
            raise ParameterError(f"need at least one round, got {self.n_rounds}")
        if self.cbar <= 0.0:
            raise ParameterError(f"cbar must be positive, got {self.cbar}")
        if self.positivity_floor <= 0.0:
            raise ParameterError("positivity floor must be positive")


def calibrate_cbar(h: SymMatField2, mu: float, gamma: float, floor: float = 1.0) -> float:
    """Smallest admissible amplitude constant: 4 sup|diag(H)| / mu^gamma, floored.

    Guarantees the first-round pinch a_1^2 in [3/4, 5/4] * cbar * mu^gamma;
    later rounds are re-checked at runtime.
    """
    _, abar = diagonal_decompose(h)
    return max(4.0 * sup_norm(abar) / mu ** gamma, floor)


def kallen_iterate(
    h: SymMatField2,
    p: KallenParams,
    return_trace: bool = False,
):
    """Run N rounds; return (a, Psi, F) and optionally the per-round trace.

    a^2 satisfies the pinch cbar*mu^gamma/2 <= a^2 <= 3*cbar*mu^gamma/2 at
    every sample or a CalibrationError (carrying the round index and the
    offending minimum) is raised.  F is evaluated from its defining formula
    with the returned grid fields, so the identity

        a^2 Id + sym grad(Psi) - H + grad(a)(x)grad(a)/lam_bar^2 = F

    is exact by construction; F equals the telescoped quadratic-error
    difference up to the truncation of the pointwise square root.
    """
    grid = h.grid
    base = p.cbar * p.mu ** p.gamma
    inv_lb2 = 1.0 / p.lam_bar ** 2

    e_prev: SymMatField2 | None = None
    a = psi = None
    e_cur = None
    trace = []
    for i in range(1, p.n_rounds + 1):
        target = h if e_prev is None else h - e_prev
        psi_raw, abar = diagonal_decompose(target)
        a_sq = abar + base
        mn = float(a_sq.values.min())
        mx = float(a_sq.values.max())
        if mn < 0.5 * base or mx > 1.5 * base:
            raise CalibrationError(
                f"amplitude pinch failed at round {i}: a^2 range [{mn:.6e}, {mx:.6e}] "
                f"outside [{0.5 * base:.6e}, {1.5 * base:.6e}]; cbar or the "
                f"frequency gap is too small",
                index=i,
                min_value=mn,
            )
        if mn < p.positivity_floor:
            raise CalibrationError(
                f"amplitude square below positivity floor at round {i}",
                index=i,
                min_value=mn,
            )
        a = sqrt_field(a_sq, floor=p.positivity_floor, what=f"amplitude round {i}")
        # diagonal_decompose solves  target + sym grad(psi_raw) = abar * Id;
        # the telescoping identity  a^2 Id + sym grad(Psi) = H - E  needs the
        # opposite-signed potential, minus the identity map paying for `base`
        psi = (-1.0) * psi_raw + AffineVectorField.scaled_identity_map(grid, -base)
        ga = grad(a)
        e_cur = SymMatField2.outer(ga, ga) * inv_lb2
        if return_trace:
            trace.append(
                {
                    "round": i,
                    "a": a,
                    "psi": psi,
                    "quadratic_error": e_cur,
                    "abar_sup": sup_norm(abar),
                    "a_sq_min": mn,
                    "a_sq_max": mx,
                }
            )
        e_prev = e_cur

    residual = SymMatField2.scalar_identity(a * a) + sym_grad(psi) - h + e_cur
    if return_trace:
        return a, psi, residual, trace
    return a, psi, residual
