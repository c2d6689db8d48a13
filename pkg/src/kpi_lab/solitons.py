"""Closed-form travelling waves: line solitons, the Zaitsev branch and friends.

The Zaitsev family is written in Cartesian branch coordinates ``a = (a1, a2)``:

    Z(a, gamma)(x, y) = gamma * A * (1 - C B) / (C - B)**2,
    A = 12 (1 - |a|^2) / sqrt(3),   C = cosh(s sqrt(gamma) x),
    s = sqrt(1 - |a|^2) / 3**(1/4), B = sqrt(2 - |a|^2) (a1 cos y - a2 sin y).

This equals gamma * Z(|a|)(sqrt(gamma) x, y + theta) with theta the polar angle
of ``a``, and is smooth through ``a = 0`` so no polar chart is needed.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import expit

from . import spectral as sp
from .spectral import Grid

S4 = 3 ** -0.25  # x-scale of the critical line soliton
C_CRIT = 4 / np.sqrt(3)
DEFAULT_GRID = (1024, 80.0, 64)


@dataclass(frozen=True)
class SolitonParams:
    a_vec: tuple[float, float] = (0.0, 0.0)
    gamma: float = 1.0
    rho: float = 0.0

    def __post_init__(self):
        if np.hypot(*self.a_vec) >= 1:
            raise ValueError(f"|a| must be < 1, got {np.hypot(*self.a_vec)}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")

    @property
    def a(self) -> float:
        return float(np.hypot(*self.a_vec))

    @property
    def theta(self) -> float:
        a1, a2 = self.a_vec
        return 0.0 if a1 == a2 == 0 else float(np.arctan2(a2, a1))


def _check_a(a: float) -> None:
    if not 0 <= a < 1:
        raise ValueError(f"a must lie in [0, 1), got {a}")


def beta(a: float) -> float:
    return a * np.sqrt(2 - a * a)


def speed(a: float) -> float:
    """Travelling speed of Z(a)."""
    _check_a(a)
    return (4 - 2 * a**2 + a**4) / (np.sqrt(3) * (1 - a**2))


def speed_derivative(a: float) -> float:
    # d/da of (4 - 2a^2 + a^4) / (sqrt3 (1 - a^2))
    num = (-4 * a + 4 * a**3) * (1 - a**2) + 2 * a * (4 - 2 * a**2 + a**4)
    return num / (np.sqrt(3) * (1 - a**2) ** 2)


def speed_second_derivative_at_zero() -> float:
    return 4 / np.sqrt(3)


def _wrap(grid: Grid, x: np.ndarray) -> np.ndarray:
    return (x + grid.lx / 2) % grid.lx - grid.lx / 2


def line_soliton(c: float, grid: Grid, x0: float = 0.0) -> np.ndarray:
    """3c sech^2(sqrt(c) x / 2), constant in y."""
    if not c > 0:
        raise ValueError(f"speed must be positive, got {c}")
    x = _wrap(grid, grid.x - x0)
    prof = 3 * c / np.cosh(np.sqrt(c) * x / 2) ** 2
    return np.repeat(prof[:, None], grid.ny, axis=1)


def line_soliton_profile(c: float, grid: Grid) -> np.ndarray:
    return line_soliton(c, grid)[:, 0]


def _pieces(grid: Grid, a1: float, a2: float, gamma: float, rho: float):
    X, Y = grid.mesh
    xr = _wrap(grid, X - rho)
    xs = np.sqrt(gamma) * xr
    r2 = a1 * a1 + a2 * a2
    s = np.sqrt(1 - r2) * S4
    b = np.sqrt(2 - r2)
    C = np.cosh(s * xs)
    proj = a1 * np.cos(Y) - a2 * np.sin(Y)
    B = b * proj
    A = 12 * (1 - r2) / np.sqrt(3)
    D = C - B
    return dict(X=X, Y=Y, xr=xr, xs=xs, r2=r2, s=s, b=b, C=C, B=B, A=A, D=D, proj=proj)


def zaitsev_family(grid: Grid, a1: float = 0.0, a2: float = 0.0, gamma: float = 1.0,
                   rho: float = 0.0) -> np.ndarray:
    if a1 * a1 + a2 * a2 >= 1:
        raise ValueError("|a| must be < 1")
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    p = _pieces(grid, a1, a2, gamma, rho)
    return gamma * p["A"] * (1 - p["C"] * p["B"]) / p["D"] ** 2


def zaitsev(a: float, grid: Grid) -> np.ndarray:
    _check_a(a)
    return zaitsev_family(grid, a, 0.0)


def zaitsev_signed(a: float, grid: Grid) -> np.ndarray:
    """Closed form with a allowed negative (beta changes sign); equals Z(|a|) shifted by pi in y."""
    if not abs(a) < 1:
        raise ValueError("|a| must be < 1")
    return zaitsev_family(grid, a, 0.0)


def scaled_zaitsev(p: SolitonParams, grid: Grid) -> np.ndarray:
    return zaitsev_family(grid, p.a_vec[0], p.a_vec[1], p.gamma, p.rho)


def family_tangents(grid: Grid, a1: float, a2: float, gamma: float = 1.0,
                    rho: float = 0.0) -> dict[str, np.ndarray]:
    """Z and its exact derivatives in x, gamma, a1 and a2 (rho derivative is -dx)."""
    p = _pieces(grid, a1, a2, gamma, rho)
    A, B, C, D, s, b = p["A"], p["B"], p["C"], p["D"], p["s"], p["b"]
    R = (1 - C * B) / D**2
    R_C = (-B * D - 2 * (1 - C * B)) / D**3
    R_B = (-C * D + 2 * (1 - C * B)) / D**3
    sh = np.sinh(s * p["xs"])
    Y = p["Y"]
    dz_dC = gamma * A * R_C
    out = {"Z": gamma * A * R}
    out["dx"] = dz_dC * sh * s * np.sqrt(gamma)
    out["dgamma"] = A * R + dz_dC * sh * s * p["xr"] / (2 * np.sqrt(gamma))
    sq = np.sqrt(1 - p["r2"])
    for name, ai, dproj in (("da1", a1, np.cos(Y)), ("da2", a2, -np.sin(Y))):
        A_i = -24 * ai / np.sqrt(3)
        s_i = -ai * S4 / sq
        C_i = sh * p["xs"] * s_i
        B_i = b * dproj - (ai / b) * p["proj"]
        out[name] = gamma * (A_i * R + A * (R_C * C_i + R_B * B_i))
    return out


# -- profiles tied to the critical line soliton -------------------------------


def vstar_antideriv(grid: Grid) -> np.ndarray:
    x = grid.x
    return 12 * np.sqrt(2) * np.sinh(S4 * x) / (3**0.25 * np.cosh(S4 * x) ** 2)


def vstar(grid: Grid) -> np.ndarray:
    """x-profile of the a-derivative of Z(a) at a = 0 (cos y component)."""
    return sp.deriv_x(grid, vstar_antideriv(grid), 1)


def vstar_closed_form(grid: Grid) -> np.ndarray:
    ch = np.cosh(S4 * grid.x)
    return 12 * np.sqrt(2) / np.sqrt(3) * (2 - ch**2) / ch**3


def cos_y_coefficient(grid: Grid, f: np.ndarray) -> np.ndarray:
    """(1/pi) * integral of f(x, y) cos y dy, per x."""
    return f @ np.cos(grid.y) * grid.dy / np.pi


def sin_y_coefficient(grid: Grid, f: np.ndarray) -> np.ndarray:
    return f @ np.sin(grid.y) * grid.dy / np.pi


def g_mu(mu: float, grid: Grid) -> np.ndarray:
    """exp(s mu x) (mu^3 + 2 mu - 3 mu^2 tanh(s x)) with s = 3**(-1/4)."""
    if not np.isfinite(mu):
        raise ValueError("mu must be finite")
    if abs(mu) * grid.lx / 2 * S4 > 700:
        raise OverflowError(f"g_mu overflows on this box for mu={mu}")
    x = grid.x
    # tanh(s x) = 1 - 2 expit(-2 s x) keeps the decaying tail accurate
    head = mu**3 + 2 * mu - 3 * mu**2 + 6 * mu**2 * expit(-2 * S4 * x)
    return np.exp(S4 * mu * x) * head


def g_mu_degenerate(grid: Grid, h: float = 1e-4) -> np.ndarray:
    """lim_{mu->1} d/dx (g_mu + g_-mu) / (mu - 1), by central differencing in mu.

    The family sum vanishes at mu = 1, so the limit is the mu-derivative there.
    Grows linearly-times-exponentially; only meaningful on a central window.
    """

    def pair(m):
        return _g_mu_dx(m, grid.x) + _g_mu_dx(-m, grid.x)

    return (pair(1 + h) - pair(1 - h)) / (2 * h)


def _g_mu_dx(mu: float, x: np.ndarray) -> np.ndarray:
    # 1 - tanh(s x) = 2 * expit(-2 s x) avoids the cancellation that otherwise
    # swamps the decaying mu = 1 member in the far field
    sig = expit(-2 * S4 * x)
    e = np.exp(S4 * mu * x)
    head = mu**3 + 2 * mu - 3 * mu**2 + 6 * mu**2 * sig
    return S4 * e * (mu * head - 12 * mu**2 * sig * (1 - sig))


def g_mu_dx(mu: float, grid: Grid) -> np.ndarray:
    """Closed-form x-derivative of g_mu (valid also for the growing members)."""
    g_mu(mu, grid)  # overflow guard
    return _g_mu_dx(mu, grid.x)


# -- masses and the scaling map -----------------------------------------------


@lru_cache(maxsize=4096)
def _mass_cached(a: float, nx: int, lx: float, ny: int) -> float:
    grid = Grid(nx, lx, ny)
    return sp.integrate(grid, zaitsev_signed(a, grid) ** 2)


def zaitsev_mass(a: float, grid: Grid | None = None) -> float:
    """M(Z(a)); negative a uses the beta-negated closed form (equal mass)."""
    g = grid or Grid(*DEFAULT_GRID)
    return _mass_cached(float(a), g.nx, g.lx, g.ny)


def gamma_l(l: float, a: float, grid: Grid | None = None) -> float:
    """Scaling that makes Z((a, 0), gamma) carry the mass of Z(l)."""
    if l < 0:
        raise ValueError("l must be >= 0")
    _check_a(abs(a))
    return (zaitsev_mass(l, grid) / zaitsev_mass(a, grid)) ** (2.0 / 3.0)

