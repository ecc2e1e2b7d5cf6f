"""Periodic grid and field containers for 2D pseudo-spectral work.

Conventions used throughout the package:

* the domain is the square torus [0, period)^2 sampled on an n-by-n
  uniform grid, n a power of two;
* real fields are stored as float64 arrays of shape (n, n), C-ordered,
  with axis 0 <-> x1 and axis 1 <-> x2;
* spectral coefficients follow the Fourier-series convention
  f(x) = sum_k c(k) exp(i kappa(k).x) with kappa(k) = (2*pi/period) * k
  and integer k in [-n/2, n/2)^2, so c = fft2(values) / n^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft as _fft


def _require_finite(values: np.ndarray, what: str = "field") -> None:
    """Reject arrays containing NaN or Inf, naming the first bad index."""
    bad = ~np.isfinite(values)
    if bad.any():
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        raise ValueError(f"non-finite {what}: first bad entry at index {idx}")


class Grid:
    """Uniform periodic grid with precomputed wavenumber arrays.

    Parameters
    ----------
    n : int
        Points per side; must be a power of two and at least 8.
    period : float
        Side length of the torus (default 2*pi).
    dealias_fraction : float
        Radial fraction of the Nyquist wavenumber kept by the dealias
        mask (default 2/3).

    Attributes
    ----------
    dx : float
        Grid spacing, period / n.
    x1, x2 : ndarray
        Coordinate arrays of shape (n, n), meshgrid with indexing='ij'.
    k1, k2 : ndarray
        Physical wavenumber arrays (2*pi/period times the integer
        lattice) in fft layout, shape (n, n).
    kmag : ndarray
        |k| on the lattice.
    nyquist : float
        Physical Nyquist radius, pi * n / period.
    dealias_radius : float
        dealias_fraction * nyquist.
    dealias_mask : ndarray of bool
        True on modes with |k| <= dealias_radius.
    """

    def __init__(self, n: int, period: float = 2.0 * np.pi,
                 dealias_fraction: float = 2.0 / 3.0):
        if n < 8 or (n & (n - 1)) != 0:
            raise ValueError(f"n must be a power of two >= 8, got {n}")
        if not (period > 0 and np.isfinite(period)):
            raise ValueError(f"period must be positive and finite, got {period}")
        if not (0 < dealias_fraction <= 1):
            raise ValueError(
                f"dealias_fraction must lie in (0, 1], got {dealias_fraction}")
        self.n = int(n)
        self.period = float(period)
        self.dealias_fraction = float(dealias_fraction)
        self.dx = self.period / self.n

        x = np.arange(self.n) * self.dx
        self.x1, self.x2 = np.meshgrid(x, x, indexing="ij")

        k_int = np.fft.fftfreq(self.n, d=1.0 / self.n)  # integers in [-n/2, n/2)
        scale = 2.0 * np.pi / self.period
        self.k1, self.k2 = np.meshgrid(scale * k_int, scale * k_int,
                                       indexing="ij")
        self.kmag = np.hypot(self.k1, self.k2)
        self.ksq = self.k1 ** 2 + self.k2 ** 2

        self.nyquist = scale * (self.n / 2)
        self.dealias_radius = self.dealias_fraction * self.nyquist
        self.dealias_mask = self.kmag <= self.dealias_radius

        # modes on the unpaired Nyquist line k_i = -n/2; odd multipliers
        # zero these so real fields stay exactly real
        nyq = np.abs(k_int + self.n / 2) < 0.5
        self._nyquist_line = np.zeros((self.n, self.n), dtype=bool)
        self._nyquist_line[nyq, :] = True
        self._nyquist_line[:, nyq] = True

    def __eq__(self, other) -> bool:
        return (isinstance(other, Grid)
                and self.n == other.n
                and self.period == other.period
                and self.dealias_fraction == other.dealias_fraction)

    def __hash__(self) -> int:
        return hash((self.n, self.period, self.dealias_fraction))

    def __repr__(self) -> str:
        return (f"Grid(n={self.n}, period={self.period!r}, "
                f"dealias_fraction={self.dealias_fraction!r})")

    # -- transforms ----------------------------------------------------

    def to_coeffs(self, values: np.ndarray) -> np.ndarray:
        """Forward transform: grid samples -> Fourier-series coefficients."""
        return _fft.fft2(values) / (self.n * self.n)

    def to_values(self, coeffs: np.ndarray) -> np.ndarray:
        """Inverse transform onto the grid, returning the real part."""
        return np.real(_fft.ifft2(coeffs * (self.n * self.n)))


@dataclass
class Field:
    """A real scalar field sampled on a Grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.grid.n, self.grid.n):
            raise ValueError(
                f"values shape {self.values.shape} does not match grid "
                f"n={self.grid.n}")
        _require_finite(self.values)

    @classmethod
    def from_function(cls, grid: Grid, func) -> "Field":
        """Sample func(x1, x2) on the grid."""
        return cls(grid, np.asarray(func(grid.x1, grid.x2), dtype=np.float64))

    @classmethod
    def zeros(cls, grid: Grid) -> "Field":
        return cls(grid, np.zeros((grid.n, grid.n)))

    def hat(self) -> "SpectralField":
        """Spectral counterpart of this field."""
        return SpectralField(self.grid, self.grid.to_coeffs(self.values))

    def __add__(self, other: "Field") -> "Field":
        _check_same_grid(self.grid, other.grid)
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        _check_same_grid(self.grid, other.grid)
        return Field(self.grid, self.values - other.values)

    def __mul__(self, scalar: float) -> "Field":
        return Field(self.grid, self.values * float(scalar))

    __rmul__ = __mul__


@dataclass
class SpectralField:
    """Complex Fourier coefficients of a real field, fft2 layout.

    coeffs[i, j] multiplies exp(i kappa . x) for the integer wavenumber
    (fftfreq[i], fftfreq[j]); conjugate symmetry c(-k) = conj(c(k)) holds
    for transforms of real fields.
    """

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        if self.coeffs.shape != (self.grid.n, self.grid.n):
            raise ValueError(
                f"coeffs shape {self.coeffs.shape} does not match grid "
                f"n={self.grid.n}")
        _require_finite(self.coeffs.view(np.float64), what="spectrum")

    def to_field(self) -> Field:
        return Field(self.grid, self.grid.to_values(self.coeffs))


@dataclass
class VectorField:
    """A velocity-style pair of real fields on a common grid.

    The divergence_free flag is only set by certification (a spectral
    divergence check), never assumed.
    """

    u1: Field
    u2: Field
    divergence_free: bool = False

    def __post_init__(self):
        _check_same_grid(self.u1.grid, self.u2.grid)

    @property
    def grid(self) -> Grid:
        return self.u1.grid

    @classmethod
    def zeros(cls, grid: Grid) -> "VectorField":
        v = cls(Field.zeros(grid), Field.zeros(grid))
        v.divergence_free = True
        return v

    def magnitude(self) -> np.ndarray:
        return np.hypot(self.u1.values, self.u2.values)

    def max_speed(self) -> float:
        return float(self.magnitude().max())

    def certify_divergence_free(self, rtol: float = 1e-10) -> "VectorField":
        """Set the divergence-free flag after a spectral divergence check.

        The max-norm of the spectral divergence must not exceed rtol times
        the max-norm of the field itself (with a small absolute floor so
        that numerically zero fields certify).
        """
        g = self.grid
        div = (1j * g.k1 * g.to_coeffs(self.u1.values)
               + 1j * g.k2 * g.to_coeffs(self.u2.values))
        scale = max(np.abs(self.u1.values).max(),
                    np.abs(self.u2.values).max(), 1e-300)
        if np.abs(div).max() > max(rtol * scale, 1e-13):
            raise ValueError(
                "velocity failed divergence-free certification: "
                f"max |div^| = {np.abs(div).max():.3e} vs scale {scale:.3e}")
        self.divergence_free = True
        return self


def _check_same_grid(a: Grid, b: Grid) -> None:
    if a != b:
        raise ValueError(f"grid mismatch: {a!r} vs {b!r}")
