"""Periodic grid fields on the torus ``T^2 = [0, 2*pi)^2`` with spectral calculus.

Values are stored on a uniform n-by-n grid, ``values[i, j] = f(i*h, j*h)``
with ``h = 2*pi/n``.  Differentiation, mollification and the Poisson solve
act on the trigonometric interpolant, so they are exact for band-limited
fields.  Every field carries a conservative band bound ``band`` (largest
``max(|k1|, |k2|)`` that may be active); products add band bounds, and any
result whose bound exceeds the grid's alias-free budget goes through a
spectral check that fails loudly when real energy would be discarded.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.fft as sfft

from .errors import ParameterError, ResolutionError

# Relative spectral-energy tolerances for the dealiasing truncation.
# Products must be essentially exact; amplitude square roots and mollified
# fields carry analytically decaying tails that are allowed to be shaved.
PRODUCT_TAIL_TOL = 1e-8
SQRT_TAIL_TOL = 1e-5

# Sentinel band bound for fields of unknown/unbounded spectral support.
UNBOUNDED = 10 ** 9


def _workers() -> int:
    return max(1, int(os.environ.get("MACORR_THREADS", "1")))


def _rfft2(values: np.ndarray) -> np.ndarray:
    return sfft.rfft2(values, workers=_workers())


def _irfft2(spec: np.ndarray, n: int) -> np.ndarray:
    return sfft.irfft2(spec, s=(n, n), workers=_workers())


class Grid2:
    """Uniform periodic grid with an alias-free frequency budget.

    ``max_active_freq <= n/4`` guarantees that the product of two in-budget
    fields stays below the Nyquist frequency, hence is evaluated exactly by
    pointwise multiplication of grid samples.
    """

    __slots__ = ("n", "h", "max_active_freq", "_k1", "_k2", "_kmax", "_nodes")

    def __init__(self, n: int, max_active_freq: int | None = None):
        if n < 8 or (n & (n - 1)) != 0:
            raise ParameterError(f"grid size must be a power of two >= 8, got {n}")
        if max_active_freq is None:
            max_active_freq = n // 4
        if not (1 <= max_active_freq <= n // 4):
            raise ParameterError(
                f"max_active_freq must lie in [1, n/4] = [1, {n // 4}], got {max_active_freq}"
            )
        self.n = int(n)
        self.h = 2.0 * math.pi / n
        self.max_active_freq = int(max_active_freq)
        self._k1 = None
        self._k2 = None
        self._kmax = None
        self._nodes = None

    # half-spectrum wavenumbers (rfft2 layout: full k1 axis, k2 >= 0)
    def wavenumbers(self):
        if self._k1 is None:
            k1 = np.fft.fftfreq(self.n, d=1.0 / self.n).reshape(-1, 1)
            k2 = np.arange(self.n // 2 + 1, dtype=float).reshape(1, -1)
            self._k1 = k1
            self._k2 = k2
        return self._k1, self._k2

    def kmax_grid(self) -> np.ndarray:
        if self._kmax is None:
            k1, k2 = self.wavenumbers()
            self._kmax = np.maximum(np.abs(k1), k2)
        return self._kmax

    def nodes(self):
        if self._nodes is None:
            x = np.arange(self.n) * self.h
            x1, x2 = np.meshgrid(x, x, indexing="ij")
            x1.flags.writeable = False
            x2.flags.writeable = False
            self._nodes = (x1, x2)
        return self._nodes

    def axis_coordinate(self, axis: int) -> np.ndarray:
        """1-d coordinate along axis 1 or 2, shaped for broadcasting."""
        x = np.arange(self.n) * self.h
        if axis == 1:
            return x.reshape(-1, 1)
        if axis == 2:
            return x.reshape(1, -1)
        raise ParameterError(f"axis must be 1 or 2, got {axis}")

    def __eq__(self, other):
        return (
            isinstance(other, Grid2)
            and self.n == other.n
            and self.max_active_freq == other.max_active_freq
        )

    def __hash__(self):
        return hash((self.n, self.max_active_freq))

    def __repr__(self):
        return f"Grid2(n={self.n}, max_active_freq={self.max_active_freq})"


def _spectral_energy_split(spec: np.ndarray, grid: Grid2):
    """Total and above-budget spectral energy of an rfft2 half-spectrum."""
    n = grid.n
    weights = np.full(spec.shape[1], 2.0)
    weights[0] = 1.0
    if n % 2 == 0:
        weights[-1] = 1.0
    e = (spec.real ** 2 + spec.imag ** 2) * weights
    total = float(e.sum())
    tail = float(e[grid.kmax_grid() > grid.max_active_freq].sum())
    return total, tail


def _band_from_spec(spec: np.ndarray, grid: Grid2, rel_tol: float = 1e-13) -> int:
    mags = np.abs(spec)
    peak = mags.max()
    if peak == 0.0:
        return 0
    active = mags > rel_tol * peak
    return int(grid.kmax_grid()[active].max())


def _dealias(values: np.ndarray, grid: Grid2, tail_tol: float, what: str,
             band_rel_tol: float = 1e-13):
    """Truncate to the frequency budget; error if real energy is discarded.

    Returns the truncated values together with the measured active band, so
    that downstream derivatives do not amplify the transform's round-off
    floor across empty spectrum.
    """
    spec = _rfft2(values)
    total, tail = _spectral_energy_split(spec, grid)
    if total == 0.0:
        return values, 0
    frac = tail / total
    if frac > tail_tol:
        raise ResolutionError(
            f"{what}: spectral tail above budget {grid.max_active_freq} carries "
            f"{frac:.3e} of total energy (tolerance {tail_tol:.1e}); "
            f"increase the grid or lower the frequencies",
            tail_fraction=frac,
            budget=grid.max_active_freq,
        )
    band = min(_band_from_spec(spec, grid, band_rel_tol), grid.max_active_freq)
    # hard-truncate at the measured band: the result is an exact trig
    # polynomial, so every later derivative/product path sees identical
    # content and algebraic identities survive at rounding level
    spec[grid.kmax_grid() > band] = 0.0
    return _irfft2(spec, grid.n), band


class ScalarField:
    """Immutable real scalar field on a :class:`Grid2`."""

    __slots__ = ("grid", "values", "band")

    def __init__(self, grid: Grid2, values: np.ndarray, band: int):
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (grid.n, grid.n):
            raise ParameterError(f"values shape {values.shape} != grid {(grid.n, grid.n)}")
        if not np.all(np.isfinite(values)):
            raise ParameterError("field values must be finite")
        if not values.flags.owndata:
            values = values.copy()
        values.flags.writeable = False
        self.grid = grid
        self.values = values
        self.band = int(min(band, UNBOUNDED))

    # ---------------------------------------------------------------- creation
    @classmethod
    def zeros(cls, grid: Grid2) -> "ScalarField":
        return cls(grid, np.zeros((grid.n, grid.n)), 0)

    @classmethod
    def constant(cls, grid: Grid2, c: float) -> "ScalarField":
        return cls(grid, np.full((grid.n, grid.n), float(c)), 0)

    @classmethod
    def from_function(cls, grid: Grid2, f: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> "ScalarField":
        x1, x2 = grid.nodes()
        values = np.asarray(f(x1, x2), dtype=np.float64)
        if values.shape != x1.shape:
            values = np.broadcast_to(values, x1.shape)
        return cls.from_values(grid, values)

    @classmethod
    def from_values(cls, grid: Grid2, values: np.ndarray) -> "ScalarField":
        """Adopt raw samples: measured band, cleaned to an exact trig polynomial."""
        values = np.array(values, dtype=np.float64)
        vals, band = _dealias(values, grid, PRODUCT_TAIL_TOL, "from_values")
        return cls(grid, vals, band)

    # ------------------------------------------------------------- arithmetic
    def _binary(self, other, op):
        if isinstance(other, ScalarField):
            if other.grid != self.grid:
                raise ParameterError("grid mismatch")
            return ScalarField(self.grid, op(self.values, other.values), max(self.band, other.band))
        if isinstance(other, (int, float)):
            return ScalarField(self.grid, op(self.values, float(other)), self.band)
        return NotImplemented

    def __add__(self, other):
        return self._binary(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __rsub__(self, other):
        if isinstance(other, (int, float)):
            return ScalarField(self.grid, float(other) - self.values, self.band)
        return NotImplemented

    def __neg__(self):
        return ScalarField(self.grid, -self.values, self.band)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return ScalarField(self.grid, self.values * float(other), self.band)
        if isinstance(other, ScalarField):
            if other.grid != self.grid:
                raise ParameterError("grid mismatch")
            raw = self.values * other.values
            bound = self.band + other.band
            if bound <= self.grid.max_active_freq:
                return ScalarField(self.grid, raw, bound)
            vals, band = _dealias(raw, self.grid, PRODUCT_TAIL_TOL, "product")
            return ScalarField(self.grid, vals, band)
        return NotImplemented

    __rmul__ = __mul__

    def mean(self) -> float:
        return float(self.values.mean())

    def __repr__(self):
        return f"ScalarField(n={self.grid.n}, band<={self.band}, sup={sup_norm(self):.3e})"


def measure_band(values: np.ndarray, grid: Grid2, rel_tol: float = 1e-13) -> int:
    """Largest max(|k1|,|k2|) whose coefficient exceeds rel_tol of the peak."""
    return _band_from_spec(_rfft2(values), grid, rel_tol)


def sqrt_field(f: ScalarField, floor: float = 0.0, what: str = "sqrt") -> ScalarField:
    """Pointwise square root of a positive field, truncated to the budget.

    The square root of a trig polynomial is not band-limited; its harmonics
    decay geometrically, so shaving above the budget is tolerated up to
    ``SQRT_TAIL_TOL`` of the energy.  Callers that need exact algebraic
    relations must recompute the squared field from the returned one.
    """
    mn = float(f.values.min())
    if mn < floor:
        from .errors import CalibrationError

        raise CalibrationError(
            f"{what}: field minimum {mn:.6e} below positivity floor {floor:.6e}",
            min_value=mn,
        )
    raw = np.sqrt(f.values)
    # a tight band threshold here: shaving harmonics of the square root
    # perturbs the squared field by the shave, which telescopes into the
    # residual identities as an additive floor
    vals, band = _dealias(raw, f.grid, SQRT_TAIL_TOL, what, band_rel_tol=1e-15)
    return ScalarField(f.grid, vals, band)


# --------------------------------------------------------------------- vectors
class VectorField2:
    """Pair of scalar fields; purely periodic (affine parts live elsewhere)."""

    __slots__ = ("c1", "c2")

    def __init__(self, c1: ScalarField, c2: ScalarField):
        if c1.grid != c2.grid:
            raise ParameterError("component grids differ")
        self.c1 = c1
        self.c2 = c2

    @property
    def grid(self) -> Grid2:
        return self.c1.grid

    @property
    def components(self):
        return (self.c1, self.c2)

    @classmethod
    def zeros(cls, grid: Grid2) -> "VectorField2":
        z = ScalarField.zeros(grid)
        return cls(z, z)

    def component(self, k: int) -> ScalarField:
        if k == 1:
            return self.c1
        if k == 2:
            return self.c2
        raise ParameterError(f"component index must be 1 or 2, got {k}")

    def __add__(self, other):
        if isinstance(other, VectorField2):
            return VectorField2(self.c1 + other.c1, self.c2 + other.c2)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, VectorField2):
            return VectorField2(self.c1 - other.c1, self.c2 - other.c2)
        return NotImplemented

    def __neg__(self):
        return VectorField2(-self.c1, -self.c2)

    def __mul__(self, other):
        if isinstance(other, (int, float, ScalarField)):
            return VectorField2(self.c1 * other, self.c2 * other)
        return NotImplemented

    __rmul__ = __mul__


class SymMatField2:
    """Symmetric 2x2 matrix field; only the entries 11, 12, 22 are stored."""

    __slots__ = ("e11", "e12", "e22")

    def __init__(self, e11: ScalarField, e12: ScalarField, e22: ScalarField):
        if not (e11.grid == e12.grid == e22.grid):
            raise ParameterError("entry grids differ")
        self.e11 = e11
        self.e12 = e12
        self.e22 = e22

    @property
    def grid(self) -> Grid2:
        return self.e11.grid

    @property
    def entries(self):
        return (self.e11, self.e12, self.e22)

    @classmethod
    def zeros(cls, grid: Grid2) -> "SymMatField2":
        z = ScalarField.zeros(grid)
        return cls(z, z, z)

    @classmethod
    def identity(cls, grid: Grid2, scale: float = 1.0) -> "SymMatField2":
        c = ScalarField.constant(grid, scale)
        return cls(c, ScalarField.zeros(grid), c)

    @classmethod
    def scalar_identity(cls, a: ScalarField) -> "SymMatField2":
        return cls(a, ScalarField.zeros(a.grid), a)

    @classmethod
    def rank_one(cls, p: ScalarField, axis: int) -> "SymMatField2":
        """p * e_axis (x) e_axis."""
        z = ScalarField.zeros(p.grid)
        if axis == 1:
            return cls(p, z, z)
        if axis == 2:
            return cls(z, z, p)
        raise ParameterError(f"axis must be 1 or 2, got {axis}")

    @classmethod
    def outer(cls, u: VectorField2, v: VectorField2) -> "SymMatField2":
        """sym(u (x) v)."""
        e12 = 0.5 * (u.c1 * v.c2) + 0.5 * (u.c2 * v.c1)
        return cls(u.c1 * v.c1, e12, u.c2 * v.c2)

    def __add__(self, other):
        if isinstance(other, SymMatField2):
            return SymMatField2(self.e11 + other.e11, self.e12 + other.e12, self.e22 + other.e22)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, SymMatField2):
            return SymMatField2(self.e11 - other.e11, self.e12 - other.e12, self.e22 - other.e22)
        return NotImplemented

    def __neg__(self):
        return SymMatField2(-self.e11, -self.e12, -self.e22)

    def __mul__(self, other):
        if isinstance(other, (int, float, ScalarField)):
            return SymMatField2(self.e11 * other, self.e12 * other, self.e22 * other)
        return NotImplemented

    __rmul__ = __mul__

    def add_constant_matrix(self, m: np.ndarray) -> "SymMatField2":
        m = np.asarray(m, dtype=float)
        sym = 0.5 * (m + m.T)
        return SymMatField2(self.e11 + sym[0, 0], self.e12 + sym[0, 1], self.e22 + sym[1, 1])

    def pointwise_min_eigenvalue(self) -> float:
        a, b, c = self.e11.values, self.e12.values, self.e22.values
        tr = 0.5 * (a + c)
        disc = np.sqrt((0.5 * (a - c)) ** 2 + b ** 2)
        return float((tr - disc).min())


class AffineVectorField:
    """Affine map ``x -> M x + offset`` plus a zero-mean periodic part.

    The gradient is periodic even though the field itself is not; the
    affine slot absorbs constant symmetric-gradient contributions that no
    periodic field can produce.  Constant offsets of the periodic part are
    folded into ``offset`` on construction.
    """

    __slots__ = ("matrix", "offset", "periodic")

    def __init__(self, matrix: np.ndarray, offset: np.ndarray, periodic: VectorField2):
        matrix = np.array(matrix, dtype=float)
        offset = np.array(offset, dtype=float)
        if matrix.shape != (2, 2) or offset.shape != (2,):
            raise ParameterError("affine part must be a 2x2 matrix and a 2-vector")
        m1 = periodic.c1.mean()
        m2 = periodic.c2.mean()
        if m1 != 0.0 or m2 != 0.0:
            offset = offset + np.array([m1, m2])
            periodic = VectorField2(periodic.c1 - m1, periodic.c2 - m2)
        matrix.flags.writeable = False
        offset.flags.writeable = False
        self.matrix = matrix
        self.offset = offset
        self.periodic = periodic

    @property
    def grid(self) -> Grid2:
        return self.periodic.grid

    @classmethod
    def zeros(cls, grid: Grid2) -> "AffineVectorField":
        return cls(np.zeros((2, 2)), np.zeros(2), VectorField2.zeros(grid))

    @classmethod
    def from_periodic(cls, periodic: VectorField2) -> "AffineVectorField":
        return cls(np.zeros((2, 2)), np.zeros(2), periodic)

    @classmethod
    def scaled_identity_map(cls, grid: Grid2, scale: float) -> "AffineVectorField":
        """The map x -> scale * x, whose symmetric gradient is scale * Id."""
        return cls(scale * np.eye(2), np.zeros(2), VectorField2.zeros(grid))

    def __add__(self, other):
        if isinstance(other, AffineVectorField):
            return AffineVectorField(
                self.matrix + other.matrix, self.offset + other.offset, self.periodic + other.periodic
            )
        if isinstance(other, VectorField2):
            return AffineVectorField(self.matrix, self.offset, self.periodic + other)
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, AffineVectorField):
            return AffineVectorField(
                self.matrix - other.matrix, self.offset - other.offset, self.periodic - other.periodic
            )
        if isinstance(other, VectorField2):
            return AffineVectorField(self.matrix, self.offset, self.periodic - other)
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            s = float(other)
            return AffineVectorField(self.matrix * s, self.offset * s, self.periodic * s)
        return NotImplemented

    __rmul__ = __mul__

    def component_values(self, k: int) -> np.ndarray:
        """Grid samples of component k over the fundamental cell."""
        x1, x2 = self.grid.nodes()
        i = k - 1
        return (
            self.matrix[i, 0] * x1
            + self.matrix[i, 1] * x2
            + self.offset[i]
            + self.periodic.component(k).values
        )


FieldLike = ScalarField | VectorField2 | SymMatField2 | AffineVectorField


# ------------------------------------------------------------- differentiation
def _derivative_multiplier(grid: Grid2, t: int, s: int) -> np.ndarray:
    k1, k2 = grid.wavenumbers()
    mult = (1j * k1) ** t * (1j * k2) ** s
    n = grid.n
    # the lone Nyquist mode has no well-defined odd derivative; it is far
    # above the budget anyway
    if t % 2 == 1:
        mult = mult.copy()
        mult[n // 2, :] = 0.0
    if s % 2 == 1:
        mult = np.array(mult, copy=True)
        mult[:, -1] = 0.0
    return mult


def _resolved(f: ScalarField) -> ScalarField:
    if f.band <= f.grid.max_active_freq:
        return f
    vals, band = _dealias(f.values, f.grid, PRODUCT_TAIL_TOL, "derivative input")
    return ScalarField(f.grid, vals, band)


def derivative(f: ScalarField, t: int, s: int) -> ScalarField:
    """Exact spectral derivative d^t/dx1^t d^s/dx2^s of the interpolant."""
    return derivative_stack(f, [(t, s)])[0]


def derivative_stack(f: ScalarField, orders: Sequence[tuple[int, int]]) -> list[ScalarField]:
    """Several derivatives of one field from a single forward transform.

    Modes above the field's certified band are zeroed first: they carry only
    transform round-off, which the derivative multiplier would amplify.
    """
    if any(t < 0 or s < 0 for t, s in orders):
        raise ParameterError("derivative orders must be nonnegative")
    f = _resolved(f)
    if all(t == 0 and s == 0 for t, s in orders):
        return [f for _ in orders]
    spec = _rfft2(f.values)
    if f.band < f.grid.n // 2:
        spec[f.grid.kmax_grid() > f.band] = 0.0
    out = []
    for t, s in orders:
        if t == 0 and s == 0:
            out.append(f)
        else:
            d = spec * _derivative_multiplier(f.grid, t, s)
            out.append(ScalarField(f.grid, _irfft2(d, f.grid.n), f.band))
    return out


def grad(f: ScalarField) -> VectorField2:
    d1, d2 = derivative_stack(f, [(1, 0), (0, 1)])
    return VectorField2(d1, d2)


def hessian(f: ScalarField) -> SymMatField2:
    d11, d12, d22 = derivative_stack(f, [(2, 0), (1, 1), (0, 2)])
    return SymMatField2(d11, d12, d22)


def sym_grad(w: AffineVectorField | VectorField2) -> SymMatField2:
    """Symmetric gradient; the affine part contributes sym(M)."""
    if isinstance(w, VectorField2):
        w = AffineVectorField.from_periodic(w)
    p = w.periodic
    d1w1, d2w1 = derivative_stack(p.c1, [(1, 0), (0, 1)])
    d1w2, d2w2 = derivative_stack(p.c2, [(1, 0), (0, 1)])
    out = SymMatField2(d1w1, 0.5 * (d2w1 + d1w2), d2w2)
    return out.add_constant_matrix(w.matrix)


def metric_pullback(v: VectorField2) -> SymMatField2:
    """(grad v)^T grad v, summed over the two codimension components."""
    g = [grad(v.c1), grad(v.c2)]
    e11 = g[0].c1 * g[0].c1 + g[1].c1 * g[1].c1
    e12 = g[0].c1 * g[0].c2 + g[1].c1 * g[1].c2
    e22 = g[0].c2 * g[0].c2 + g[1].c2 * g[1].c2
    return SymMatField2(e11, e12, e22)


def curl_curl(a: SymMatField2) -> ScalarField:
    """The double-curl scalar d22 A11 - 2 d12 A12 + d11 A22.

    Annihilates symmetric gradients; pairs with test functions in the weak
    form of the Monge-Ampere equation.
    """
    return (
        derivative(a.e11, 0, 2) - 2.0 * derivative(a.e12, 1, 1) + derivative(a.e22, 2, 0)
    )


def defect(v: VectorField2, w: AffineVectorField, a: SymMatField2) -> SymMatField2:
    """A - (1/2 (grad v)^T grad v + sym grad w): the quantity driven to zero."""
    return a - 0.5 * metric_pullback(v) - sym_grad(w)


# ----------------------------------------------------------------- mollifier
_KERNEL_CACHE: dict[tuple[int, int, float], np.ndarray] = {}


def _mollifier_symbol(grid: Grid2, l: float) -> np.ndarray:
    key = (grid.n, grid.max_active_freq, float(l))
    sym = _KERNEL_CACHE.get(key)
    if sym is not None:
        return sym
    n, h = grid.n, grid.h
    x = np.arange(n) * h
    x = np.where(x > math.pi, x - 2.0 * math.pi, x)  # signed coordinates
    r2 = (x.reshape(-1, 1) ** 2 + x.reshape(1, -1) ** 2) / (l * l)
    kernel = np.zeros((n, n))
    inside = r2 < 1.0
    kernel[inside] = np.exp(-1.0 / (1.0 - r2[inside]))
    total = kernel.sum() * h * h
    if total <= 0.0:
        raise ParameterError(f"mollifier support too small for the grid (l={l}, h={h})")
    kernel /= total  # discrete mass exactly one
    sym = _rfft2(kernel) * (h * h)
    if len(_KERNEL_CACHE) > 16:
        _KERNEL_CACHE.clear()
    _KERNEL_CACHE[key] = sym
    return sym


def mollifier_symbol_at(grid: Grid2, l: float, k1: int, k2: int) -> float:
    """Response of the discrete mollifier at one Fourier mode (diagnostic)."""
    sym = _mollifier_symbol(grid, l)
    idx1 = k1 % grid.n
    if k2 < 0 or k2 > grid.n // 2:
        raise ParameterError("k2 must lie in the half spectrum")
    return float(sym[idx1, k2].real)


def mollify(f: FieldLike, l: float) -> FieldLike:
    """Circular convolution with the radial bump kernel at scale l.

    The discretely sampled kernel is renormalized to unit mass, so constants
    are preserved exactly.  Output is truncated to the frequency budget
    (the kernel itself is a smoother, nothing real is lost).
    """
    if not (0.0 < l < math.pi):
        raise ParameterError(f"mollification scale must lie in (0, pi), got {l}")
    if isinstance(f, ScalarField):
        sym = _mollifier_symbol(f.grid, l)
        spec = _rfft2(f.values) * sym
        spec[f.grid.kmax_grid() > f.grid.max_active_freq] = 0.0
        band = _band_from_spec(spec, f.grid)
        return ScalarField(f.grid, _irfft2(spec, f.grid.n), band)
    if isinstance(f, VectorField2):
        return VectorField2(mollify(f.c1, l), mollify(f.c2, l))
    if isinstance(f, SymMatField2):
        return SymMatField2(mollify(f.e11, l), mollify(f.e12, l), mollify(f.e22, l))
    if isinstance(f, AffineVectorField):
        # unit mass and radial symmetry leave the affine part untouched
        return AffineVectorField(f.matrix, f.offset, mollify(f.periodic, l))
    raise ParameterError(f"cannot mollify {type(f).__name__}")


def commutator(f: ScalarField, g: ScalarField, l: float) -> ScalarField:
    """(fg)*phi_l - (f*phi_l)(g*phi_l); quadratic in l for smooth inputs."""
    return mollify(f * g, l) - mollify(f, l) * mollify(g, l)


# --------------------------------------------------------------------- norms
def _scalar_components(f: FieldLike) -> list[np.ndarray]:
    if isinstance(f, ScalarField):
        return [f.values]
    if isinstance(f, VectorField2):
        return [f.c1.values, f.c2.values]
    if isinstance(f, SymMatField2):
        return [f.e11.values, f.e12.values, f.e22.values]
    if isinstance(f, AffineVectorField):
        return [f.component_values(1), f.component_values(2)]
    raise ParameterError(f"not a field: {type(f).__name__}")


def sup_norm(f: FieldLike) -> float:
    """Sup over grid samples, maximized over components/entries."""
    return max(float(np.abs(v).max()) for v in _scalar_components(f))


def _periodic_scalars(f: FieldLike) -> list[ScalarField]:
    if isinstance(f, ScalarField):
        return [f]
    if isinstance(f, VectorField2):
        return [f.c1, f.c2]
    if isinstance(f, SymMatField2):
        return [f.e11, f.e12, f.e22]
    if isinstance(f, AffineVectorField):
        return [f.periodic.c1, f.periodic.c2]
    raise ParameterError(f"not a field: {type(f).__name__}")


def cm_norm(f: FieldLike, m: int) -> float:
    """Max over derivative multi-indices up to order m of the sup norms."""
    if not (0 <= m <= 4):
        raise ParameterError(f"cm_norm supports orders 0..4, got {m}")
    best = sup_norm(f)
    if m == 0:
        return best
    if isinstance(f, AffineVectorField):
        best = max(best, float(np.abs(f.matrix).max()))
    orders = [(t, s) for total in range(1, m + 1) for t in range(total + 1) for s in [total - t]]
    for comp in _periodic_scalars(f):
        for d in derivative_stack(comp, orders):
            best = max(best, float(np.abs(d.values).max()))
    return best


def holder_seminorm(f: FieldLike, alpha: float, max_levels: int | None = None) -> float:
    """Dyadic-pair estimate of the Hoelder-alpha seminorm.

    Samples all axis-aligned and diagonal point pairs at separations
    ``h * 2**q``; exact sup over pairs would be O(n^4).  The estimate only
    grows when more levels are added.
    """
    if not (0.0 < alpha <= 1.0):
        raise ParameterError(f"alpha must lie in (0, 1], got {alpha}")
    if isinstance(f, AffineVectorField):
        raise ParameterError("holder_seminorm is defined for periodic fields only")
    comps = _scalar_components(f)
    grid = comps[0].shape[0]
    h = 2.0 * math.pi / grid
    levels = int(math.log2(grid // 2)) + 1
    if max_levels is not None:
        levels = min(levels, max_levels)
    best = 0.0
    for q in range(levels):
        shift = 1 << q
        sep_axis = (h * shift) ** alpha
        sep_diag = (h * shift * math.sqrt(2.0)) ** alpha
        for v in comps:
            d1 = np.abs(v - np.roll(v, shift, axis=0)).max()
            d2 = np.abs(v - np.roll(v, shift, axis=1)).max()
            dd1 = np.abs(v - np.roll(np.roll(v, shift, axis=0), shift, axis=1)).max()
            dd2 = np.abs(v - np.roll(np.roll(v, shift, axis=0), -shift, axis=1)).max()
            best = max(best, d1 / sep_axis, d2 / sep_axis, dd1 / sep_diag, dd2 / sep_diag)
    return float(best)


def integrate(f: ScalarField) -> float:
    """Trapezoidal integral over the torus; exact for in-budget fields."""
    return float(f.values.sum()) * f.grid.h ** 2


# ------------------------------------------------------------- Poisson solve
def poisson_solve(rhs: ScalarField, mean_tol: float = 1e-12) -> ScalarField:
    """Zero-mean phi with Laplacian(phi) = rhs; rhs must be mean-zero."""
    m = rhs.mean()
    scale = sup_norm(rhs)
    if abs(m) > mean_tol * max(scale, 1.0):
        raise ParameterError(f"Poisson right-hand side must be mean-zero, mean = {m:.6e}")
    grid = rhs.grid
    k1, k2 = grid.wavenumbers()
    ksq = k1 ** 2 + k2 ** 2
    spec = _rfft2(rhs.values)
    safe = np.where(ksq == 0.0, 1.0, ksq)
    spec = -spec / safe
    spec[0, 0] = 0.0
    return ScalarField(grid, _irfft2(spec, grid.n), rhs.band)
