"""Fourier machinery on the periodic box [-lx/2, lx/2) x [0, 2pi).

Fields are plain ``numpy`` arrays of shape ``(nx, ny)`` (x is axis 0) and
x-profiles are arrays of shape ``(nx,)``. Every routine takes the owning
:class:`Grid` first. Spectral coefficients use the normalisation

    u(x, y) = sum_{p,q} c[p, q] exp(i (xi_p x + k_q y)),

so that ``integrate(u**2) == area * sum |c|**2`` (Parseval).
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft

MEAN_TOL = 1e-10


def _workers() -> int:
    return int(os.environ.get("KPI_LAB_THREADS", "1") or 1)


def _is_smooth(n: int) -> bool:
    for p in (2, 3, 5, 7):
        while n % p == 0:
            n //= p
    return n == 1


class MeanError(ValueError):
    """Raised when an operation needing zero x-mean receives a field without it."""


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid; the y period is fixed at 2*pi."""

    nx: int
    lx: float
    ny: int

    def __post_init__(self):
        for name in ("nx", "ny"):
            n = getattr(self, name)
            if int(n) != n or n < 8 or n % 2:
                raise ValueError(f"{name} must be an even integer >= 8, got {n}")
            if not _is_smooth(int(n)):
                raise ValueError(f"{name}={n} has a prime factor above 7")
        if not self.lx > 0:
            raise ValueError(f"lx must be positive, got {self.lx}")

    @property
    def dx(self) -> float:
        return self.lx / self.nx

    @property
    def dy(self) -> float:
        return 2 * np.pi / self.ny

    @property
    def area(self) -> float:
        return self.lx * 2 * np.pi

    @cached_property
    def x(self) -> np.ndarray:
        return -self.lx / 2 + np.arange(self.nx) * self.dx

    @cached_property
    def y(self) -> np.ndarray:
        return np.arange(self.ny) * self.dy

    @cached_property
    def xi(self) -> np.ndarray:
        """x wavenumbers in FFT order; the Nyquist entry is -pi nx / lx."""
        return 2 * np.pi * sfft.fftfreq(self.nx, d=self.dx)

    @cached_property
    def k(self) -> np.ndarray:
        return sfft.fftfreq(self.ny, d=1.0 / self.ny)

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")

    def zeros(self) -> np.ndarray:
        return np.zeros((self.nx, self.ny))

    def with_nx(self, nx: int) -> "Grid":
        return Grid(nx, self.lx, self.ny)


def make_grid(nx: int, lx: float, ny: int) -> Grid:
    return Grid(int(nx), float(lx), int(ny))


# -- transforms -------------------------------------------------------------


def fft(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Normalised coefficients of a field or x-profile."""
    f = np.asarray(f, dtype=float)
    if f.ndim == 1:
        return sfft.fft(f, workers=_workers()) / grid.nx
    return sfft.fft2(f, workers=_workers()) / (grid.nx * grid.ny)


def ifft(grid: Grid, c: np.ndarray) -> np.ndarray:
    if c.ndim == 1:
        return sfft.ifft(c * grid.nx, workers=_workers()).real
    return sfft.ifft2(c * (grid.nx * grid.ny), workers=_workers()).real


def _xsym(grid: Grid, sym: np.ndarray, ndim: int) -> np.ndarray:
    return sym if ndim == 1 else sym[:, None]


def _nyquist_x(grid: Grid) -> int:
    return grid.nx // 2


def x_mean_coefficients(grid: Grid, f: np.ndarray) -> np.ndarray:
    """The xi = 0 coefficients, one per y mode (a scalar array for profiles)."""
    c = fft(grid, f)
    return c[0] if c.ndim == 1 else c[0, :]


def check_mean_zero(grid: Grid, f: np.ndarray, include_constant: bool = True,
                    tol: float = MEAN_TOL) -> None:
    c = fft(grid, f)
    scale = max(np.abs(c).max(), 1e-300)
    zero = np.atleast_1d(c[0] if c.ndim == 1 else c[0, :])
    if not include_constant:
        zero = zero[1:]
    worst = np.abs(zero).max() if zero.size else 0.0
    if worst > tol * max(scale, 1.0):
        raise MeanError(f"x-mean {worst:.3e} exceeds tolerance {tol:g} (relative)")


def deriv_x(grid: Grid, f: np.ndarray, order: int = 1) -> np.ndarray:
    """Spectral x-derivative; the Nyquist mode is dropped for odd orders."""
    if order < 1:
        raise ValueError("order must be >= 1")
    c = fft(grid, f)
    sym = (1j * grid.xi) ** order
    if order % 2:
        sym = sym.copy()
        sym[_nyquist_x(grid)] = 0.0
    return ifft(grid, c * _xsym(grid, sym, c.ndim))


def antideriv_x(grid: Grid, f: np.ndarray, order: int = 1, check: bool = True) -> np.ndarray:
    """Zero-mean spectral antiderivative, inverse of :func:`deriv_x` on mean-zero data."""
    if order < 1:
        raise ValueError("order must be >= 1")
    if check:
        check_mean_zero(grid, f)
    c = fft(grid, f)
    sym = np.zeros(grid.nx, dtype=complex)
    nz = grid.xi != 0
    sym[nz] = (1j * grid.xi[nz]) ** (-order)
    if order % 2:
        sym[_nyquist_x(grid)] = 0.0
    return ifft(grid, c * _xsym(grid, sym, c.ndim))


def antideriv_x_decaying(grid: Grid, f: np.ndarray, order: int = 2) -> np.ndarray:
    """Antiderivative normalised to vanish at the box edge instead of having zero mean.

    Approximates the antiderivative on the line that decays at infinity; the
    periodic version differs from it by a constant per y-line of size O(1/lx).
    """
    out = antideriv_x(grid, f, order)
    return out - out[0:1] if out.ndim == 2 else out - out[0]


def deriv_y(grid: Grid, f: np.ndarray, order: int = 1) -> np.ndarray:
    c = fft(grid, f)
    sym = (1j * grid.k) ** order
    if order % 2:
        sym = sym.copy()
        sym[grid.ny // 2] = 0.0
    return ifft(grid, c * sym[None, :])


def shift(grid: Grid, f: np.ndarray, x0: float = 0.0, y0: float = 0.0) -> np.ndarray:
    """Spectral translation: returns f(x - x0, y - y0)."""
    c = fft(grid, f)
    if c.ndim == 1:
        return ifft(grid, c * np.exp(-1j * grid.xi * x0))
    phase = np.exp(-1j * grid.xi * x0)[:, None] * np.exp(-1j * grid.k * y0)[None, :]
    # Nyquist modes cannot carry a fractional shift and stay real.
    phase[grid.nx // 2, :] = phase[grid.nx // 2, :].real
    phase[:, grid.ny // 2] = phase[:, grid.ny // 2].real
    return ifft(grid, c * phase)


# -- quadrature and norms ---------------------------------------------------


def integrate(grid: Grid, f: np.ndarray) -> float:
    return float(grid.area * np.mean(f))


def integrate_x(grid: Grid, p: np.ndarray) -> float:
    return float(grid.dx * np.sum(p))


def inner(grid: Grid, f: np.ndarray, g: np.ndarray) -> float:
    return integrate(grid, f * g) if np.ndim(f) == 2 else integrate_x(grid, f * g)


def z1_weight(grid: Grid) -> np.ndarray:
    """(1 + |xi| + |k/xi|) on the coefficient lattice, 1 on the xi = 0 column."""
    xi = np.abs(grid.xi)[:, None]
    k = np.abs(grid.k)[None, :]
    with np.errstate(divide="ignore"):
        w = 1 + xi + np.where(xi > 0, k / np.where(xi > 0, xi, 1.0), 0.0)
    w[0, :] = 1.0
    return w


def z1_parts(grid: Grid, f: np.ndarray) -> tuple[float, float]:
    """Squared Z1 norm split into (xi != 0 part, xi = 0 column measured with weight 1)."""
    c = fft(grid, f)
    w2 = z1_weight(grid) ** 2
    tot = np.abs(c) ** 2 * w2
    zero = float(grid.area * tot[0, :].sum())
    return float(grid.area * tot[1:, :].sum()), zero


def z1_norm(grid: Grid, f: np.ndarray, strict: bool = True) -> float:
    """Discrete Z1 norm. ``strict`` rejects nonzero (0, q != 0) coefficients."""
    if strict:
        check_mean_zero(grid, f, include_constant=False)
    main, zero = z1_parts(grid, f)
    return float(np.sqrt(main + zero))


def pad(grid: Grid, f: np.ndarray, factor: float = 1.5) -> tuple[np.ndarray, float]:
    """Zero-pad the spectrum; returns samples on the finer grid and its cell area."""
    c = fft(grid, f)
    mx = int(np.ceil(grid.nx * factor / 2)) * 2
    my = int(np.ceil(grid.ny * factor / 2)) * 2
    big = np.zeros((mx, my), dtype=complex)
    hx, hy = grid.nx // 2, grid.ny // 2
    ix = np.r_[0:hx, mx - hx:mx]
    iy = np.r_[0:hy, my - hy:my]
    big[np.ix_(ix, iy)] = c
    # split the Nyquist rows/columns symmetrically to keep the interpolant real
    big[hx, :] = 0.5 * big[mx - hx, :]
    big[mx - hx, :] *= 0.5
    big[:, hy] = 0.5 * big[:, my - hy]
    big[:, my - hy] *= 0.5
    vals = sfft.ifft2(big * (mx * my), workers=_workers()).real
    return vals, grid.area / (mx * my)


def integrate_cube(grid: Grid, f: np.ndarray) -> float:
    """Alias-free integral of f**3 via 3/2 padding."""
    vals, cell = pad(grid, f, 1.5)
    return float(cell * np.sum(vals ** 3))
