"""Fourier-side fields and multiplier operators on periodic grids.

Fields live on a uniform d-dimensional periodic box [0, L)^d (d = 2 or 3)
with n points per axis.  Wavevectors are k = (2*pi/L) * m with integer
m in [-n/2, n/2).  One normalization is used everywhere:

    coeffs  = fftn(samples) * L**(d/2) / n**d
    samples = real(ifftn(coeffs)) * n**d / L**(d/2)

Under it Parseval holds without extra factors,

    sum_k |coeffs(k)|**2 = integral |f(x)|**2 dx,

with the integral evaluated by the (spectrally exact) grid quadrature.

Nonlinear terms are formed pseudo-spectrally: inverse transform, pointwise
multiply, forward transform, then the 2/3-rule mask.  `multiply` bundles
that pattern; everything else in this module is a pure Fourier multiplier.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import MeanZeroError

__all__ = [
    "GridSpec",
    "RealField",
    "SpectralField",
    "transform",
    "inverse",
    "apply_multiplier",
    "fractional_laplacian",
    "lambda_power",
    "gradient",
    "divergence",
    "friedrich_project",
    "low_mid_high_split",
    "dealias",
    "multiply",
    "inner",
    "hermitian_defect",
]


@dataclass(frozen=True)
class GridSpec:
    """Periodic grid: dimension, points per axis, box length, dealias fraction."""

    dim: int
    n: int
    length: float = 2.0 * np.pi
    dealias_fraction: float = 2.0 / 3.0

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if self.n < 4 or (self.n & (self.n - 1)) != 0:
            raise ValueError(f"n must be a power of two >= 4, got {self.n}")
        if not self.length > 0:
            raise ValueError(f"box length must be positive, got {self.length}")
        if not 0.0 < self.dealias_fraction <= 1.0:
            raise ValueError("dealias_fraction must lie in (0, 1]")

    @property
    def shape(self):
        return (self.n,) * self.dim

    @property
    def npoints(self):
        return self.n**self.dim

    @property
    def dx(self):
        return self.length / self.n

    @property
    def cell_volume(self):
        return self.dx**self.dim

    @property
    def volume(self):
        return self.length**self.dim

    @property
    def coeff_scale(self):
        """Factor mapping numpy's unnormalized fftn output to stored coefficients."""
        return self.length ** (self.dim / 2.0) / self.npoints

    # Wavenumber tables are cached per grid; k arrays are broadcastable
    # (length n along their own axis, 1 elsewhere) to avoid dense meshgrids.
    @property
    def k(self):
        return _tables(self)[0]

    @property
    def ksq(self):
        return _tables(self)[1]

    @property
    def kmag(self):
        return _tables(self)[2]

    @property
    def dealias_mask(self):
        return _tables(self)[3]

    @property
    def kmax(self):
        return float(self.kmag.max())

    @property
    def kmin_positive(self):
        """Smallest nonzero |k| on the grid (the 2*pi/L fundamental)."""
        return 2.0 * np.pi / self.length

    @property
    def x(self):
        """Physical coordinates, broadcastable like `k`."""
        ax = np.arange(self.n) * self.dx
        return tuple(
            ax.reshape([-1 if i == j else 1 for j in range(self.dim)])
            for i in range(self.dim)
        )


@lru_cache(maxsize=64)
def _tables(grid: GridSpec):
    m = np.fft.fftfreq(grid.n, d=1.0 / grid.n)  # integer modes 0..n/2-1, -n/2..-1
    k1d = (2.0 * np.pi / grid.length) * m
    k = tuple(
        k1d.reshape([-1 if i == j else 1 for j in range(grid.dim)])
        for i in range(grid.dim)
    )
    ksq = sum(ki**2 for ki in k)
    kmag = np.sqrt(ksq)
    mcut = grid.dealias_fraction * grid.n / 2.0
    mask = np.ones(grid.shape, dtype=bool)
    for mi in (
        np.abs(m).reshape([-1 if i == j else 1 for j in range(grid.dim)])
        for i in range(grid.dim)
    ):
        mask &= mi <= mcut
    return k, ksq, kmag, mask


@dataclass
class RealField:
    """Real samples on the physical grid."""

    grid: GridSpec
    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.shape != self.grid.shape:
            raise ValueError(
                f"samples shape {self.samples.shape} does not match grid {self.grid.shape}"
            )

    def copy(self):
        return RealField(self.grid, self.samples.copy())

    def l2_norm(self):
        return float(np.sqrt(self.grid.cell_volume * np.sum(self.samples**2)))


@dataclass
class SpectralField:
    """Complex Fourier coefficients of a scalar field."""

    grid: GridSpec
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        if self.coeffs.shape != self.grid.shape:
            raise ValueError(
                f"coeffs shape {self.coeffs.shape} does not match grid {self.grid.shape}"
            )

    def copy(self):
        return SpectralField(self.grid, self.coeffs.copy())

    def __add__(self, other):
        _check_same_grid(self, other)
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        _check_same_grid(self, other)
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return SpectralField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__

    def l2_norm(self):
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))

    def mean_coefficient(self):
        return complex(self.coeffs[(0,) * self.grid.dim])

    @classmethod
    def zero(cls, grid):
        return cls(grid, np.zeros(grid.shape, dtype=np.complex128))


def _check_same_grid(a, b):
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")


# -- transform pair ----------------------------------------------------------

def samples_to_coeffs(grid, samples):
    return np.fft.fftn(samples) * grid.coeff_scale


def coeffs_to_samples(grid, coeffs):
    return np.real(np.fft.ifftn(coeffs)) * (grid.npoints / grid.length ** (grid.dim / 2.0))


def transform(f: RealField) -> SpectralField:
    return SpectralField(f.grid, samples_to_coeffs(f.grid, f.samples))


def inverse(F: SpectralField) -> RealField:
    return RealField(F.grid, coeffs_to_samples(F.grid, F.coeffs))


def hermitian_defect(F: SpectralField) -> float:
    """Relative deviation from f_hat(-k) = conj(f_hat(k))."""
    c = F.coeffs
    flipped = c[tuple(slice(None, None, -1) for _ in range(F.grid.dim))]
    flipped = np.roll(flipped, 1, axis=tuple(range(F.grid.dim)))
    scale = np.max(np.abs(c))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(np.conj(flipped) - c)) / scale)


# -- multipliers --------------------------------------------------------------

def apply_multiplier(F: SpectralField, symbol, at_zero=None) -> SpectralField:
    """Multiply coefficients by a symbol m(k).

    `symbol` is either a callable taking the broadcastable wavevector arrays,
    or a precomputed table.  The symbol must be finite on the retained
    lattice; if it is not finite at k = 0 the value there has to be supplied
    via `at_zero`, unless the field has zero mean (then 0 is used).
    """
    grid = F.grid
    if callable(symbol):
        table = np.asarray(symbol(*grid.k), dtype=np.float64)
    else:
        table = np.asarray(symbol)
    table = np.broadcast_to(table, grid.shape)
    zero = (0,) * grid.dim
    if not np.isfinite(table[zero]):
        if at_zero is None:
            mean = abs(F.coeffs[zero])
            scale = max(float(np.max(np.abs(F.coeffs))), 1.0)
            if mean > 1e-13 * scale:
                raise MeanZeroError(
                    "symbol undefined at k = 0 and field has nonzero mean; "
                    "supply at_zero or remove the mean"
                )
            at_zero = 0.0
        table = table.copy()
        table[zero] = at_zero
    if not np.all(np.isfinite(table)):
        raise ValueError("symbol is not finite on the retained lattice")
    return SpectralField(grid, F.coeffs * table)


def _lambda_table(grid, s):
    """|k|**s as ksq**(s/2), with the k = 0 entry patched to 0.

    Computing through ksq keeps |k|**(2*alpha) bit-identical between the
    fractional Laplacian and lambda_power at s = 2*alpha.
    """
    zero = (0,) * grid.dim
    base = grid.ksq.copy()
    base[zero] = 1.0
    table = base ** (s / 2.0)
    table[zero] = 1.0 if s == 0 else 0.0
    return table


def fractional_laplacian(F: SpectralField, alpha: float) -> SpectralField:
    """(-Laplacian)**alpha: the multiplier |k|**(2 alpha), zero on the mean mode."""
    if not alpha > 0:
        raise ValueError(f"fractional order must be positive, got {alpha}")
    return SpectralField(F.grid, F.coeffs * _lambda_table(F.grid, 2.0 * alpha))


def lambda_power(F: SpectralField, s: float) -> SpectralField:
    """|k|**s multiplier; negative s requires a mean-zero field."""
    grid = F.grid
    if s < 0:
        zero = (0,) * grid.dim
        mean = abs(F.coeffs[zero])
        scale = max(float(np.max(np.abs(F.coeffs))), 1.0)
        if mean > 1e-13 * scale:
            raise MeanZeroError(
                f"lambda_power with s={s} < 0 requires a mean-zero field "
                f"(|mean coefficient| = {mean:.3e})"
            )
    return SpectralField(grid, F.coeffs * _lambda_table(grid, s))


def gradient(F: SpectralField):
    """Tuple of i*k_j multipliers."""
    return tuple(
        SpectralField(F.grid, 1j * kj * F.coeffs) for kj in F.grid.k
    )


def divergence(V) -> SpectralField:
    """Sum of i*k_j applied to the components of a vector field."""
    V = tuple(V)
    grid = V[0].grid
    if len(V) != grid.dim:
        raise ValueError(f"expected {grid.dim} components, got {len(V)}")
    out = np.zeros(grid.shape, dtype=np.complex128)
    for kj, comp in zip(grid.k, V):
        _check_same_grid(V[0], comp)
        out += 1j * kj * comp.coeffs
    return SpectralField(grid, out)


def friedrich_project(F: SpectralField, eps: float) -> SpectralField:
    """Sharp truncation to |k| <= 1/eps.  Idempotent by construction."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    mask = F.grid.kmag <= 1.0 / eps
    return SpectralField(F.grid, np.where(mask, F.coeffs, 0.0))


def low_mid_high_split(F: SpectralField, r0: float = 1.0, R0: float = 4.0):
    """Sharp cutoff split f = f_low + f_mid + f_high at radii r0 < R0.

    f_low is supported in |k| <= r0, f_high in |k| >= R0, f_mid in between;
    the three parts sum back to f exactly in coefficients.
    """
    if not 0 < r0 < R0:
        raise ValueError(f"need 0 < r0 < R0, got r0={r0}, R0={R0}")
    kmag = F.grid.kmag
    low = kmag <= r0
    high = kmag >= R0
    mid = ~(low | high)
    return tuple(
        SpectralField(F.grid, np.where(m, F.coeffs, 0.0)) for m in (low, mid, high)
    )


def dealias(F: SpectralField) -> SpectralField:
    """Zero every mode with any |m_i| above the dealias fraction of n/2."""
    return SpectralField(F.grid, np.where(F.grid.dealias_mask, F.coeffs, 0.0))


def multiply(a: SpectralField, b: SpectralField, dealiased: bool = True) -> SpectralField:
    """Pseudo-spectral pointwise product, 2/3-rule masked by default."""
    _check_same_grid(a, b)
    grid = a.grid
    pa = coeffs_to_samples(grid, a.coeffs)
    pb = coeffs_to_samples(grid, b.coeffs)
    out = samples_to_coeffs(grid, pa * pb)
    if dealiased:
        out = np.where(grid.dealias_mask, out, 0.0)
    return SpectralField(grid, out)


def inner(a: SpectralField, b: SpectralField) -> float:
    """L2 inner product <a, b> evaluated on the Fourier side."""
    _check_same_grid(a, b)
    return float(np.real(np.sum(np.conj(a.coeffs) * b.coeffs)))
