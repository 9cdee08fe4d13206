"""Periodic torus grids and the spectral operators built on them.

Fields are plain numpy arrays. A scalar field has shape ``grid.shape``;
a vector field carries its components on a leading axis, shape
``(grid.dim,) + grid.shape``. Spectral coefficients use the standard
(unshifted, unnormalized) ``fftn`` layout over the spatial axes.

First-order operators use the "effective" wavenumbers, with the Nyquist
component zeroed, so that divergence, gradient, Leray projection and the
Poisson solve are mutually consistent on even grids.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft


class GridError(ValueError):
    """Raised for invalid grids or fields that do not match a grid."""


class DivergenceError(ValueError):
    """Raised when a field required to be solenoidal is not."""


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Uniform grid on the torus ``[0, length)^dim``."""

    dim: int = 2
    size: int = 64
    length: float = 2 * math.pi

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise GridError(f"dim must be 2 or 3, got {self.dim}")
        if self.size < 8 or not _is_power_of_two(int(self.size)):
            raise GridError(f"size must be a power of two >= 8, got {self.size}")
        if not (self.length > 0 and math.isfinite(self.length)):
            raise GridError(f"length must be positive, got {self.length}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.size,) * self.dim

    @property
    def spacing(self) -> float:
        return self.length / self.size

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def axes(self) -> tuple[int, ...]:
        """Spatial axes counted from the end, so they work for scalars and vectors."""
        return tuple(range(-self.dim, 0))

    def summary(self) -> dict:
        return {"dim": self.dim, "size": self.size, "length": self.length}

    def coordinates(self) -> np.ndarray:
        """Meshgrid of sample positions, shape ``(dim,) + shape``."""
        x = np.arange(self.size) * self.spacing
        return np.stack(np.meshgrid(*([x] * self.dim), indexing="ij"))

    @cached_property
    def integer_modes(self) -> np.ndarray:
        """Integer wavevectors in fft layout, shape ``(dim,) + shape``."""
        k = np.fft.fftfreq(self.size, d=1.0 / self.size)
        return np.stack(np.meshgrid(*([k] * self.dim), indexing="ij"))

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Angular wavevectors ``2*pi*k/L``."""
        return self.integer_modes * (2 * math.pi / self.length)

    @cached_property
    def derivative_wavenumbers(self) -> np.ndarray:
        """Wavevectors with the Nyquist component zeroed (first-order operators)."""
        kd = self.wavenumbers.copy()
        kd[self.integer_modes == -self.size // 2] = 0.0
        return kd

    @cached_property
    def radius(self) -> np.ndarray:
        """Euclidean |xi| of each lattice frequency."""
        return np.sqrt(np.sum(self.wavenumbers**2, axis=0))

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        cutoff = self.size // 3
        return np.all(np.abs(self.integer_modes) <= cutoff, axis=0)

    @cached_property
    def nyquist_free_mask(self) -> np.ndarray:
        return np.all(self.integer_modes != -self.size // 2, axis=0)


# -- transforms ---------------------------------------------------------------


def check_field(grid: Grid, f: np.ndarray, vector: bool | None = None) -> np.ndarray:
    f = np.asarray(f)
    if f.shape[-grid.dim:] != grid.shape:
        raise GridError(f"field shape {f.shape} does not match grid {grid.shape}")
    if vector is True and f.shape != (grid.dim,) + grid.shape:
        raise GridError(f"expected vector field of shape {(grid.dim,) + grid.shape}")
    if vector is False and f.shape != grid.shape:
        raise GridError(f"expected scalar field of shape {grid.shape}")
    return f


def to_spectral(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Forward DFT over the spatial axes (unnormalized, numpy convention)."""
    f = check_field(grid, f)
    if not np.all(np.isfinite(f)):
        raise GridError("field contains non-finite samples")
    return sfft.fftn(f, axes=grid.axes)


def to_physical(grid: Grid, F: np.ndarray) -> np.ndarray:
    """Inverse DFT, returning the real part."""
    return sfft.ifftn(F, axes=grid.axes).real


def apply_multiplier(grid: Grid, f: np.ndarray, mult: np.ndarray) -> np.ndarray:
    return to_physical(grid, to_spectral(grid, f) * mult)


# -- derivatives --------------------------------------------------------------


def spectral_derivative(grid: Grid, f: np.ndarray, axis: int, order: int = 1) -> np.ndarray:
    """Partial derivative of ``f`` along spatial ``axis``, ``order`` times.

    Odd orders drop the Nyquist mode, which has no real-valued derivative.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    if not 0 <= axis < grid.dim:
        raise ValueError(f"axis must be in [0, {grid.dim})")
    k = grid.derivative_wavenumbers[axis] if order % 2 else grid.wavenumbers[axis]
    return apply_multiplier(grid, f, (1j * k) ** order)


def gradient(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Gradient of a scalar, or the Jacobian ``out[i, k] = d_k f_i`` of a vector."""
    F = to_spectral(grid, f)
    kd = grid.derivative_wavenumbers
    parts = [to_physical(grid, 1j * kd[a] * F) for a in range(grid.dim)]
    return np.stack(parts, axis=0 if f.ndim == grid.dim else 1)


def divergence(grid: Grid, v: np.ndarray) -> np.ndarray:
    v = check_field(grid, v, vector=True)
    V = to_spectral(grid, v)
    return to_physical(grid, np.sum(1j * grid.derivative_wavenumbers * V, axis=0))


def curl(grid: Grid, v: np.ndarray) -> np.ndarray:
    """Scalar vorticity in 2D, vector vorticity in 3D."""
    J = gradient(grid, check_field(grid, v, vector=True))
    if grid.dim == 2:
        return J[1, 0] - J[0, 1]
    return np.stack([J[2, 1] - J[1, 2], J[0, 2] - J[2, 0], J[1, 0] - J[0, 1]])


def laplacian(grid: Grid, f: np.ndarray) -> np.ndarray:
    return apply_multiplier(grid, f, -np.sum(grid.wavenumbers**2, axis=0))


# -- projections and pressure ------------------------------------------------


def _leray_spectral(grid: Grid, V: np.ndarray) -> np.ndarray:
    kd = grid.derivative_wavenumbers
    k2 = np.sum(kd**2, axis=0)
    inv = np.divide(1.0, k2, out=np.zeros_like(k2), where=k2 > 0)
    return V - kd * (np.sum(kd * V, axis=0) * inv)


def leray_project(grid: Grid, v: np.ndarray) -> np.ndarray:
    """Orthogonal projection onto divergence-free fields (zero mode kept)."""
    v = check_field(grid, v, vector=True)
    return to_physical(grid, _leray_spectral(grid, to_spectral(grid, v)))


def dealias(grid: Grid, f: np.ndarray) -> np.ndarray:
    """2/3 rule: zero every mode with some ``|k_i| > size // 3``."""
    return apply_multiplier(grid, f, grid.dealias_mask)


def advect(grid: Grid, w: np.ndarray, v: np.ndarray, dealiased: bool = True) -> np.ndarray:
    """``(w . grad) v`` for vector or scalar ``v``, products on the grid."""
    J = gradient(grid, v)
    if v.ndim == grid.dim:
        out = np.einsum("k...,k...->...", w, J)
    else:
        out = np.einsum("k...,ik...->i...", w, J)
    return dealias(grid, out) if dealiased else out


def divergence_defect(grid: Grid, w: np.ndarray) -> float:
    """Sup of the spectral divergence relative to the sup of the gradient."""
    div = np.max(np.abs(divergence(grid, w)))
    scale = max(1.0, float(np.max(np.abs(gradient(grid, w)))))
    return float(div / scale)


def require_solenoidal(grid: Grid, w: np.ndarray, tol: float = 1e-10, name: str = "w"):
    defect = divergence_defect(grid, w)
    if defect > tol:
        raise DivergenceError(f"{name} is not divergence-free: relative defect {defect:.3e} > {tol:g}")


def pressure_gradient(
    grid: Grid,
    w: np.ndarray,
    v: np.ndarray,
    b_pair: tuple[np.ndarray, np.ndarray] | None = None,
    check: bool = True,
) -> np.ndarray:
    """Gradient of P with ``-Lap P = div((w.grad)v)``.

    With ``b_pair = (a, b)`` the magnetic term is subtracted:
    ``-Lap P = div((w.grad)v) - div((a.grad)b)``. The zero frequency of P
    is set to 0. Products are 2/3-dealiased.
    """
    if check:
        require_solenoidal(grid, w)
    source = advect(grid, w, v)
    if b_pair is not None:
        a, b = b_pair
        source = source - advect(grid, a, b)
    S = to_spectral(grid, source)
    kd = grid.derivative_wavenumbers
    k2 = np.sum(kd**2, axis=0)
    inv = np.divide(1.0, k2, out=np.zeros_like(k2), where=k2 > 0)
    P = 1j * np.sum(kd * S, axis=0) * inv
    return to_physical(grid, 1j * kd * P)


# -- zero-padded (alias-free) products ---------------------------------------


def _axis_slice(ndim: int, axis: int, a: int, b: int) -> tuple:
    idx = [slice(None)] * ndim
    idx[axis] = slice(a, b)
    return tuple(idx)


def _pad_axis(F: np.ndarray, axis: int, n: int, m: int) -> np.ndarray:
    """Zero-pad one axis from n to m modes, splitting the Nyquist plane."""
    shape = list(F.shape)
    shape[axis] = m
    out = np.zeros(shape, dtype=complex)
    h, d = n // 2, F.ndim
    out[_axis_slice(d, axis, 0, h)] = F[_axis_slice(d, axis, 0, h)]
    out[_axis_slice(d, axis, m - h + 1, m)] = F[_axis_slice(d, axis, h + 1, n)]
    nyq = 0.5 * F[_axis_slice(d, axis, h, h + 1)]
    out[_axis_slice(d, axis, h, h + 1)] = nyq
    out[_axis_slice(d, axis, m - h, m - h + 1)] = nyq
    return out


def _truncate_axis(F: np.ndarray, axis: int, n: int, m: int) -> np.ndarray:
    """Keep modes |k| < n/2 of an m-mode axis; the Nyquist plane is zeroed."""
    shape = list(F.shape)
    shape[axis] = n
    out = np.zeros(shape, dtype=complex)
    h, d = n // 2, F.ndim
    out[_axis_slice(d, axis, 0, h)] = F[_axis_slice(d, axis, 0, h)]
    out[_axis_slice(d, axis, h + 1, n)] = F[_axis_slice(d, axis, m - h + 1, m)]
    return out


@dataclass(frozen=True)
class PaddedGrid:
    """Physical-space view on a grid twice as fine, used for exact products."""

    grid: Grid

    @property
    def size(self) -> int:
        return 2 * self.grid.size

    def lift(self, f: np.ndarray) -> np.ndarray:
        """Trigonometric interpolant of ``f`` sampled on the fine grid."""
        return self.lift_spectral(to_spectral(self.grid, f))

    def lift_spectral(self, F: np.ndarray) -> np.ndarray:
        n, m = self.grid.size, self.size
        for ax in self.grid.axes:
            F = _pad_axis(F, ax, n, m)
        scale = (m / n) ** self.grid.dim
        return sfft.ifftn(F, axes=self.grid.axes).real * scale

    def lower_spectral(self, fine: np.ndarray) -> np.ndarray:
        """Spectral coefficients (coarse layout) of the fine-grid samples, truncated."""
        n, m = self.grid.size, self.size
        F = sfft.fftn(fine, axes=self.grid.axes)
        for ax in self.grid.axes:
            F = _truncate_axis(F, ax, n, m)
        return F / (m / n) ** self.grid.dim

    def lower(self, fine: np.ndarray) -> np.ndarray:
        return to_physical(self.grid, self.lower_spectral(fine))


def padded_product(grid: Grid, f: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Alias-free product: exact ``f*g`` projected onto modes ``|k_i| < size/2``."""
    pg = PaddedGrid(grid)
    return pg.lower(pg.lift(f) * pg.lift(g))
