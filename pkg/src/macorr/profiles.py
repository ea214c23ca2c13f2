"""Closed-form oscillation profiles ``t -> amp * sin(freq * t + phase)``.

The family is closed under differentiation and antidifferentiation, so
iterated primitives of the corrugation profiles stay uniformly bounded and
are evaluated without numerical quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .fields import Grid2, ScalarField


@dataclass(frozen=True)
class TrigProfile:
    """alpha * sin(beta * t + phase) with beta > 0."""

    amplitude: float
    frequency: float
    phase: float = 0.0

    def __post_init__(self):
        if self.frequency <= 0.0:
            raise ParameterError(f"profile frequency must be positive, got {self.frequency}")

    def __call__(self, t):
        return self.amplitude * np.sin(self.frequency * np.asarray(t, dtype=float) + self.phase)

    def derivative(self) -> "TrigProfile":
        return TrigProfile(self.amplitude * self.frequency, self.frequency, self.phase + 0.5 * math.pi)

    def antiderivative(self, times: int = 1) -> "TrigProfile":
        if times < 0:
            raise ParameterError("antiderivative count must be nonnegative")
        return TrigProfile(
            self.amplitude / self.frequency ** times,
            self.frequency,
            self.phase - 0.5 * math.pi * times,
        )

    @property
    def sup(self) -> float:
        return abs(self.amplitude)

    def is_zero_mean(self) -> bool:
        # every pure sine/cosine with beta >= 1 integrates to zero over a period
        return True


def antiderivative(p: TrigProfile, times: int = 1) -> TrigProfile:
    """Iterated closed-form primitive; derivative() inverts it exactly."""
    return p.antiderivative(times)


# The four corrugation profiles.  GAMMA_TILDE itself has mean one; only its
# zero-mean shift GAMMA_TILDE_M1 may be fed to the oscillatory decompositions.
GAMMA = TrigProfile(2.0, 1.0, 0.0)                       # 2 sin t
GAMMA_BAR = TrigProfile(0.5, 2.0, 0.5 * math.pi)         # (1/2) cos 2t
GAMMA_DBAR = TrigProfile(-0.5, 2.0, 0.0)                 # -(1/2) sin 2t
GAMMA_TILDE_M1 = TrigProfile(-0.5, 2.0, 0.5 * math.pi)   # (1 - (1/2) cos 2t) - 1


def gamma_tilde(t):
    """1 - (1/2) cos 2t  (the squared-corrugation profile, mean one)."""
    return 1.0 - 0.5 * np.cos(2.0 * np.asarray(t, dtype=float))


def profile_field(grid: Grid2, p: TrigProfile, lam: int, axis: int) -> ScalarField:
    """Sample p(lam * x_axis) on the grid as a band-(beta*lam) field.

    ``lam * frequency`` must be an integer so the oscillation is periodic on
    the torus; evaluation is pointwise in closed form to avoid any sampling
    error in the fast phase.
    """
    if lam < 1 or lam != int(lam):
        raise ParameterError(f"oscillation frequency must be a positive integer, got {lam}")
    k = p.frequency * lam
    if abs(k - round(k)) > 1e-9:
        raise ParameterError(
            f"profile frequency {p.frequency} * lam {lam} is not an integer; not torus-periodic"
        )
    x = grid.axis_coordinate(axis)
    values = np.broadcast_to(p(lam * x), (grid.n, grid.n)).copy()
    return ScalarField(grid, values, int(round(k)))
