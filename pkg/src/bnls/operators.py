"""Differential operators and functionals for cylindrically symmetric fields.

The radial direction uses 4th-order centered differences on the half-offset
nodes with even reflection across the axis (u(-r) = u(r)) and zero ghosts
beyond the wall at r_max; the axial direction is spectral (periodic FFT).
The cylindrical measure lives in Grid.quad_weights only, so all pointwise
work here is plain array arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .geometry import Grid

_FFT_WORKERS = 2


@dataclass
class Field:
    """Complex samples u(r_j, z_k) on a Grid."""

    grid: Grid
    values: np.ndarray
    generation: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.shape != (self.grid.n_r, self.grid.n_z):
            raise ValueError(f"field shape {self.values.shape} does not match grid "
                             f"({self.grid.n_r}, {self.grid.n_z})")

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy(), self.generation)

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.values).all())


def _pad_parity(values: np.ndarray) -> np.ndarray:
    """Prepend two even-reflected ghost rows and append two zero rows."""
    ghosts = values[1::-1]          # rows [u_1, u_0] -> positions r_{-2}, r_{-1}
    zeros = np.zeros_like(values[:2])
    return np.concatenate([ghosts, values, zeros], axis=0)


def radial_d1(grid: Grid, values: np.ndarray) -> np.ndarray:
    """4th-order first radial derivative at the nodes."""
    p = _pad_parity(values)
    n = grid.n_r
    return (p[0:n] - 8.0 * p[1:n + 1] + 8.0 * p[3:n + 3] - p[4:n + 4]) / (12.0 * grid.dr)


def radial_d2(grid: Grid, values: np.ndarray) -> np.ndarray:
    """4th-order second radial derivative at the nodes."""
    p = _pad_parity(values)
    n = grid.n_r
    return (-p[0:n] + 16.0 * p[1:n + 1] - 30.0 * p[2:n + 2]
            + 16.0 * p[3:n + 3] - p[4:n + 4]) / (12.0 * grid.dr**2)


def axial_d1(grid: Grid, values: np.ndarray) -> np.ndarray:
    vh = sfft.fft(values, axis=1, workers=_FFT_WORKERS)
    vh *= 1j * grid.kz[None, :]
    return sfft.ifft(vh, axis=1, workers=_FFT_WORKERS)


def axial_d2(grid: Grid, values: np.ndarray) -> np.ndarray:
    vh = sfft.fft(values, axis=1, workers=_FFT_WORKERS)
    vh *= -grid.kz[None, :] ** 2
    return sfft.ifft(vh, axis=1, workers=_FFT_WORKERS)


def laplacian_values(grid: Grid, values: np.ndarray) -> np.ndarray:
    coef = (grid.d - 2) / grid.r_nodes
    return radial_d2(grid, values) + coef[:, None] * radial_d1(grid, values) + axial_d2(grid, values)


def laplacian(u: Field) -> Field:
    """Delta u = u_rr + ((d-2)/r) u_r + u_zz."""
    return Field(u.grid, laplacian_values(u.grid, u.values), u.generation)


def bilaplacian(u: Field) -> Field:
    """Delta^2 u by operator composition."""
    return Field(u.grid, laplacian_values(u.grid, laplacian_values(u.grid, u.values)),
                 u.generation)


# ---------------------------------------------------------------------------
# functionals
# ---------------------------------------------------------------------------


def inner(u: Field, v: Field) -> complex:
    """<u, v> = int conj(u) v dx with the cylindrical measure."""
    return complex(np.sum(u.grid.quad_weights @ (np.conj(u.values) * v.values)) * u.grid.dz)


def norm_sq(u: Field) -> float:
    w = u.grid.quad_weights
    return float(np.sum(w @ (u.values.real**2 + u.values.imag**2)) * u.grid.dz)


@dataclass(frozen=True)
class FunctionalSnapshot:
    """Mass, energy and the norms entering the virial estimates at one time."""

    mass: float
    energy: float
    grad_sq: float
    grad_y_sq: float
    dz_sq: float
    lap_sq: float
    pot: float
    time: float = 0.0


def grad_y_sq(u: Field) -> float:
    du = radial_d1(u.grid, u.values)
    w = u.grid.quad_weights
    return float(np.sum(w @ (du.real**2 + du.imag**2)) * u.grid.dz)


def dz_sq(u: Field) -> float:
    """||d_z u||_2^2 via the exact spectral Parseval identity."""
    uh = sfft.fft(u.values, axis=1, workers=_FFT_WORKERS)
    w = u.grid.quad_weights
    spec = (uh.real**2 + uh.imag**2) * u.grid.kz[None, :] ** 2
    return float(np.sum(w @ spec) * u.grid.dz / u.grid.n_z)


def functionals(u: Field, mu: float, sigma: float, time: float = 0.0) -> FunctionalSnapshot:
    """Mass, energy and gradient/Laplacian norms of the field."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    grid = u.grid
    w = grid.quad_weights
    absu2 = u.values.real**2 + u.values.imag**2
    mass = float(np.sum(w @ absu2) * grid.dz)
    gy = grad_y_sq(u)
    gz = dz_sq(u)
    lap = laplacian_values(grid, u.values)
    lap_sq = float(np.sum(w @ (lap.real**2 + lap.imag**2)) * grid.dz)
    pot = float(np.sum(w @ absu2 ** (sigma + 1.0)) * grid.dz)
    grad = gy + gz
    energy = 0.5 * lap_sq + 0.5 * mu * grad - pot / (2.0 * sigma + 2.0)
    return FunctionalSnapshot(mass=mass, energy=energy, grad_sq=grad, grad_y_sq=gy,
                              dz_sq=gz, lap_sq=lap_sq, pot=pot, time=time)


def lp_norm(u: Field, p: float) -> float:
    """(int |u|^p dx)^{1/p} with the cylindrical measure."""
    if p < 1:
        raise ValueError("p must be >= 1")
    absu = np.abs(u.values)
    return float((np.sum(u.grid.quad_weights @ absu**p) * u.grid.dz) ** (1.0 / p))


def axial_trace_sup(u: Field) -> float:
    """sup over z of int_{R^{d-1}} |u|^2 dy."""
    absu2 = u.values.real**2 + u.values.imag**2
    return float((u.grid.quad_weights @ absu2).max())
