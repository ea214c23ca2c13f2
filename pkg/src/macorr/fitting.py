"""Least-squares power-law fitting for the convergence-rate experiments."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class LogLogFit:
    slope: float
    intercept: float
    stderr: float      # standard error of the slope
    r_squared: float

    def ci95(self) -> tuple[float, float]:
        return (self.slope - 1.96 * self.stderr, self.slope + 1.96 * self.stderr)


def fit_loglog(xs, ys) -> LogLogFit:
    """Fit log(y) = slope*log(x) + b; data must be positive and non-degenerate."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size != ys.size or xs.size < 2:
        raise ParameterError("need at least two (x, y) pairs to fit")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ParameterError("log-log fit needs positive data")
    lx, ly = np.log(xs), np.log(ys)
    n = lx.size
    vx = lx - lx.mean()
    denom = float((vx ** 2).sum())
    if denom == 0.0:
        raise ParameterError("degenerate abscissae in fit")
    slope = float((vx * (ly - ly.mean())).sum() / denom)
    intercept = float(ly.mean() - slope * lx.mean())
    resid = ly - (slope * lx + intercept)
    ss_res = float((resid ** 2).sum())
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    stderr = math.sqrt(ss_res / max(n - 2, 1) / denom) if n > 2 else 0.0
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return LogLogFit(slope=slope, intercept=intercept, stderr=stderr, r_squared=r2)
