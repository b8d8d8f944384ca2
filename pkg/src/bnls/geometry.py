"""Cylindrical grids and the smooth virial cutoff.

Fields live on R^{d-1} x R restricted to cylindrical symmetry: a sample
u[j, k] sits at radius r_j = (j + 1/2) dr (no node on the axis) and axial
position z_k on a uniform periodic grid.  The radial quadrature carries the
full surface measure omega_{d-2} r^{d-2} dr, so pointwise operations on
sample arrays never see the measure.

Radial weights are midpoint weights plus Euler-Maclaurin end corrections.
The corrections are parity-aware: at the axis they are built on the span of
r^{d-2+2i} (the only profiles an even smooth integrand can produce), which
makes them vanish identically for even d and keeps them from polluting the
spectral accuracy midpoint sums enjoy on smooth decaying integrands.  The
rule integrates f with f * r^{d-2} polynomial of degree <= 5 exactly; in
particular the constant 1 integrates to the exact ball volume for d <= 7.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial, gamma, pi
import io

import numpy as np
from numpy.polynomial import Polynomial


def sphere_area(n: int) -> float:
    """Surface area of the unit sphere S^{n-1} in R^n."""
    return 2.0 * pi ** (n / 2.0) / gamma(n / 2.0)


def ball_volume(n: int, radius: float = 1.0) -> float:
    """Volume of the ball of given radius in R^n."""
    return sphere_area(n) / n * radius**n


# ---------------------------------------------------------------------------
# quadrature weights
# ---------------------------------------------------------------------------

# Euler-Maclaurin correction coefficients for the half-offset midpoint rule:
# integral = h*sum(g) + sum_m EM[m] * h^{m+1} * (g^(m)(b) - g^(m)(0)).
_EM = {1: 1.0 / 24.0, 3: -7.0 / 5760.0, 5: 31.0 / 967680.0}


def _minnorm_stencil(x: np.ndarray, exps: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Minimal-norm c with sum_j c_j x_j^e = rhs_e for each exponent e."""
    A = np.array([x**e for e in exps])
    return A.T @ np.linalg.solve(A @ A.T, rhs)


def _radial_weights(d: int, r_max: float, n_r: int) -> np.ndarray:
    h = r_max / n_r
    r = (np.arange(n_r) + 0.5) * h
    gcoef = np.zeros(n_r)

    # outer end: general polynomial stencils (degree 5) on mirrored nodes
    K = min(12, n_r)
    xs = np.arange(K) + 0.5
    for m, em in _EM.items():
        rhs = np.zeros(6)
        rhs[m] = float(factorial(m))
        c = _minnorm_stencil(xs, np.arange(6.0), rhs)
        # mirrored nodes flip the sign of odd derivatives
        gcoef[-K:] += (-em * c)[::-1]

    # axis end: stencils exact on the even-integrand span {r^(d-2+2i)}
    Ka = min(8, n_r)
    xa = np.arange(Ka) + 0.5
    exps = np.array([d - 2 + 2 * i for i in range(4)], dtype=float)
    for m, em in _EM.items():
        rhs = np.array([float(factorial(m)) if e == m else 0.0 for e in exps])
        if not rhs.any():
            continue
        gcoef[:Ka] += -em * _minnorm_stencil(xa, exps, rhs)

    w = sphere_area(d - 1) * r ** (d - 2) * h * (1.0 + gcoef)
    return w


# ---------------------------------------------------------------------------
# grid
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Grid:
    """Cylindrical discretization of R^{d-1} x R.

    r_nodes are half-offset (no sample at r = 0); z_nodes are uniform and
    periodic on [-z_max, z_max).  quad_weights are the radial weights
    including the omega_{d-2} r^{d-2} surface factor, so that
    sum_j quad_weights[j] * dz * sum_k f[j, k] integrates f over the domain.
    """

    d: int
    n_r: int
    r_max: float
    n_z: int
    z_max: float
    r_nodes: np.ndarray = field(repr=False)
    quad_weights: np.ndarray = field(repr=False)
    z_nodes: np.ndarray = field(repr=False)

    @property
    def dr(self) -> float:
        return self.r_max / self.n_r

    @property
    def dz(self) -> float:
        return 2.0 * self.z_max / self.n_z

    @property
    def kz(self) -> np.ndarray:
        """Axial spectral wavenumbers matching numpy's FFT layout."""
        return 2.0 * pi * np.fft.fftfreq(self.n_z, d=self.dz)

    @property
    def r_edges(self) -> np.ndarray:
        return np.arange(self.n_r + 1) * self.dr

    def integrate(self, values: np.ndarray) -> complex | float:
        """Integrate samples over the cylinder (radial profile or 2-D array)."""
        if values.ndim == 1:
            return float(np.real_if_close(np.sum(self.quad_weights * values)))
        return np.sum(self.quad_weights @ values) * self.dz

    def integrate_radial(self, values: np.ndarray):
        """Integrate a radial profile (or each axial slice of a 2-D array) over R^{d-1}."""
        if values.ndim == 1:
            return np.sum(self.quad_weights * values)
        return self.quad_weights @ values

    def fingerprint(self) -> str:
        import hashlib

        hsh = hashlib.sha256()
        for arr in (self.r_nodes, self.quad_weights, self.z_nodes):
            hsh.update(np.ascontiguousarray(arr).tobytes())
        hsh.update(f"{self.d},{self.n_r},{self.n_z},{self.r_max},{self.z_max}".encode())
        return hsh.hexdigest()[:16]


def build_grid(d: int, r_max: float, n_r: int, z_max: float, n_z: int) -> Grid:
    """Build the cylindrical grid; rejects d < 3 and odd n_z."""
    if d < 3:
        raise ValueError(f"d must be >= 3 (got {d}); the radial estimates need d-1 >= 2")
    if n_r < 16:
        raise ValueError(f"n_r must be >= 16 (got {n_r})")
    if n_z < 16 or n_z % 2 != 0:
        raise ValueError(f"n_z must be even and >= 16 (got {n_z})")
    if r_max <= 0 or z_max <= 0:
        raise ValueError("r_max and z_max must be positive")
    h = r_max / n_r
    r_nodes = (np.arange(n_r) + 0.5) * h
    z_nodes = -z_max + np.arange(n_z) * (2.0 * z_max / n_z)
    w = _radial_weights(d, r_max, n_r)
    if (w < 0).any():
        raise RuntimeError("negative quadrature weight; construction bug")
    return Grid(d=d, n_r=n_r, r_max=float(r_max), n_z=n_z, z_max=float(z_max),
                r_nodes=r_nodes, quad_weights=w, z_nodes=z_nodes)


# ---------------------------------------------------------------------------
# cutoff profile
# ---------------------------------------------------------------------------

def _smoothstep11() -> Polynomial:
    """Degree-11 smoothstep on [0, 1]: S(0)=0, S(1)=1, S'..S^(5) vanish at both ends."""
    # S'(x) = c * x^5 (1-x)^5 normalized to S(1) = 1
    sp = Polynomial([0, 0, 0, 0, 0, 1]) * Polynomial([1, -1]) ** 5
    s = sp.integ()
    return s / s(1.0)


_BRIDGE_END = 9.0  # psi' vanishes here; comfortably inside the r >= 10 plateau


class _BaseProfile:
    """The unscaled cutoff psi: quadratic core, polynomial bridge, flat tail.

    psi'(x) = x * w(x) with w a decreasing C^5 window (1 on x <= 1, 0 on
    x >= _BRIDGE_END).  Monotone w gives psi'' = w + x w' <= 1,
    psi'/x = w <= 1 and Delta psi <= d - 1 pointwise, i.e. every sign
    condition the virial estimates rely on holds by construction.
    """

    def __init__(self):
        x0, x1 = 1.0, _BRIDGE_END
        S = _smoothstep11()
        # w(x) = 1 - S((x - x0)/(x1 - x0)) as a polynomial in x
        shift = Polynomial([-x0 / (x1 - x0), 1.0 / (x1 - x0)])
        w = Polynomial([1.0]) - S(shift)
        dpsi_bridge = Polynomial([0.0, 1.0]) * w
        psi_bridge = dpsi_bridge.integ()
        psi_bridge += 0.5 - psi_bridge(x0)
        self._psi_bridge = [psi_bridge] + [psi_bridge.deriv(k) for k in range(1, 7)]
        self._psi_core = [Polynomial([0.0, 0.0, 0.5]).deriv(k) for k in range(0, 7)]
        self.x1 = x1
        self.const = float(psi_bridge(x1))

    def eval(self, x: np.ndarray, k: int = 0) -> np.ndarray:
        """k-th derivative of psi at x >= 0."""
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        core = x <= 1.0
        bridge = (x > 1.0) & (x < self.x1)
        out[core] = self._psi_core[k](x[core])
        out[bridge] = self._psi_bridge[k](x[bridge])
        if k == 0:
            out[x >= self.x1] = self.const
        return out

    def derivative_sup(self, k: int) -> float:
        """sup |psi^(k)| over a dense probe of the bridge (core/tail included)."""
        x = np.linspace(0.0, self.x1 + 1.0, 20001)
        return float(np.abs(self.eval(x, k)).max())


_BASE = _BaseProfile()


def _radial_laplacian_terms(m: int, n_dim: int) -> dict[int, float]:
    """Coefficients c_k with Delta^m f = sum_k c_k f^(k)(r) r^(k - 2m) for radial f in R^n."""
    terms = {0: 1.0}
    for it in range(m):
        new: dict[int, float] = {}
        for k, c in terms.items():
            p = k - 2 * it
            new[k + 2] = new.get(k + 2, 0.0) + c
            new[k + 1] = new.get(k + 1, 0.0) + c * (2 * p + n_dim - 1)
            if p != 0:
                new[k] = new.get(k, 0.0) + c * p * (p - 2 + n_dim)
        terms = {k: v for k, v in new.items() if v != 0.0}
    return terms


@dataclass(frozen=True)
class CutoffProfile:
    """Tabulated psi_R and everything the virial diagnostics consume."""

    R: float
    grid: Grid = field(repr=False)
    psi: np.ndarray = field(repr=False)
    dpsi: dict[int, np.ndarray] = field(repr=False)        # k -> psi_R^(k), k = 1..6
    lap_psi: np.ndarray = field(repr=False)                # Delta psi_R in R^{d-1}
    bilap_psi: np.ndarray = field(repr=False)
    trilap_psi: np.ndarray = field(repr=False)
    d2_lap_psi: np.ndarray = field(repr=False)             # (Delta psi_R)''
    tail_truncated: bool = False

    @property
    def phi_grad_r(self) -> np.ndarray:
        """Radial component of grad(phi_R) = psi_R'(r)."""
        return self.dpsi[1]

    @property
    def phi_grad_z(self) -> np.ndarray:
        """Axial component of grad(phi_R) = x_d."""
        return self.grid.z_nodes

    def derivative_sup(self, k: int) -> float:
        return float(np.abs(self.dpsi[k]).max())

    def to_csv(self, path) -> None:
        header = "r,psi,dpsi,d2psi,lap_psi,bilap_psi,trilap_psi"
        data = np.column_stack([self.grid.r_nodes, self.psi, self.dpsi[1],
                                self.dpsi[2], self.lap_psi, self.bilap_psi,
                                self.trilap_psi])
        np.savetxt(path, data, delimiter=",", header=header, comments="")


def build_cutoff(grid: Grid, R: float) -> CutoffProfile:
    """Tabulate psi_R(r) = R^2 psi(r/R) and its derivatives on the grid nodes."""
    if R <= 0:
        raise ValueError("R must be positive")
    x = grid.r_nodes / R
    psi = R**2 * _BASE.eval(x, 0)
    dpsi = {k: R ** (2 - k) * _BASE.eval(x, k) for k in range(1, 7)}
    n_dim = grid.d - 1
    r = grid.r_nodes

    def lap_power(m: int) -> np.ndarray:
        out = np.zeros_like(r)
        for k, c in _radial_laplacian_terms(m, n_dim).items():
            out += c * dpsi[k] * r ** (k - 2 * m)
        return out

    lap = lap_power(1)
    bilap = lap_power(2)
    trilap = lap_power(3)
    # (Delta psi)'' for the mass-critical A_R coefficient
    d2lap = dpsi[4] + (n_dim - 1) * (dpsi[3] / r - 2 * dpsi[2] / r**2 + 2 * dpsi[1] / r**3)

    profile = CutoffProfile(R=float(R), grid=grid, psi=psi, dpsi=dpsi,
                            lap_psi=lap, bilap_psi=bilap, trilap_psi=trilap,
                            d2_lap_psi=d2lap,
                            tail_truncated=bool(10.0 * R > grid.r_max))
    cert = certify_cutoff(profile, grid)
    if not cert.passed:
        raise RuntimeError(f"cutoff construction violates a sign condition: {cert}")
    return profile


@dataclass(frozen=True)
class CutoffCertificate:
    """Per-condition minima of the cutoff sign properties over all nodes."""

    min_one_minus_d2psi: float
    min_one_minus_dpsi_over_r: float
    min_dm1_minus_lap: float
    max_d2psi: float
    derivative_sups: dict[int, float]
    tol: float = 1e-12

    @property
    def passed(self) -> bool:
        return (self.min_one_minus_d2psi >= -self.tol
                and self.min_one_minus_dpsi_over_r >= -self.tol
                and self.min_dm1_minus_lap >= -self.tol)


def certify_cutoff(profile: CutoffProfile, grid: Grid) -> CutoffCertificate:
    r = grid.r_nodes
    d2 = profile.dpsi[2]
    return CutoffCertificate(
        min_one_minus_d2psi=float((1.0 - d2).min()),
        min_one_minus_dpsi_over_r=float((1.0 - profile.dpsi[1] / r).min()),
        min_dm1_minus_lap=float((grid.d - 1 - profile.lap_psi).min()),
        max_d2psi=float(d2.max()),
        derivative_sups={k: profile.derivative_sup(k) for k in range(1, 7)},
    )
