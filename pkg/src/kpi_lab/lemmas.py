"""Numerical checks of the mass and action expansions along the Zaitsev branch.

Two routes to the fourth a-derivative of a -> M(Z(a)) at a = 0 are kept apart:
finite differences of grid masses (with Richardson extrapolation), and exact
rational arithmetic on sech moments. The derivative route never looks at the
moment constants and vice versa.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from . import functionals as fn
from . import solitons as so
from . import spectral as sp
from .spectral import Grid

# Fourth a-derivative of M(Z(a)) at 0 in its two printed forms. The lemma
# statement carries 4^3 = 64 in front of 3^(13/4) pi int sech^4; the last line
# of its proof simplifies to 2 * 12^2 * 3^2 / 3^(3/4) = 32 * 3^(13/4). With
# int sech^4 = 4/3 these are 256 and 128 times 3^(9/4) pi respectively.
MASS_D4_STATED = 256 * 3**2.25 * math.pi
MASS_D4_PROOF = 128 * 3**2.25 * math.pi


class StepError(ValueError):
    """Finite-difference step outside the usable window."""


@dataclass(frozen=True)
class DerivativeEstimate:
    order: int
    value: float
    step: float
    stencil_order: int
    richardson_error: float
    levels: tuple[float, ...] = ()

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ExpansionFit:
    exponent: int
    fitted_coefficient: float
    predicted_coefficient: float
    sample_range: tuple[float, float]
    relative_deviation: float
    residual: float

    def to_dict(self) -> dict:
        return asdict(self)


def _fit(exponent, xs, ys, nuisance, predicted):
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    cols = [xs**exponent] + [xs ** (exponent + p) for p in nuisance]
    A = np.stack(cols, axis=1)
    scale = np.abs(A).max(axis=0)
    coef, *_ = np.linalg.lstsq(A / scale, ys, rcond=None)
    coef = coef / scale
    resid = float(np.linalg.norm(A @ coef - ys) / max(np.linalg.norm(ys), 1e-300))
    fitted = float(coef[0])
    dev = abs(fitted - predicted) / abs(predicted)
    return ExpansionFit(exponent, fitted, float(predicted),
                        (float(xs.min()), float(xs.max())), float(dev), resid)


# -- sech moments ---------------------------------------------------------------


def sech_moment_exact(k: int) -> Fraction:
    """int_R sech^{2k} as an exact rational, from the moment recurrence with base 2."""
    if k < 1:
        raise ValueError("k must be >= 1")
    val = Fraction(2)
    for j in range(1, k):
        val *= Fraction(2 * j, 2 * j + 1)
    return val


def sech_moment(k: int) -> float:
    return float(sech_moment_exact(k))


def sech_moment_quadrature(k: int, nx: int = 4096, lx: float = 80.0) -> float:
    grid = Grid(nx, lx, 8)
    return sp.integrate_x(grid, np.cosh(grid.x) ** (-2 * k))


def order2_integrand_check() -> float:
    """Quadrature of -3/f^4 + 20/f^6 + 2/f^2 - 16/f^4 with f = cosh."""
    grid = Grid(4096, 80.0, 8)
    f = np.cosh(grid.x)
    return sp.integrate_x(grid, -3 / f**4 + 20 / f**6 + 2 / f**2 - 16 / f**4)


@dataclass(frozen=True)
class BetaRoute:
    moment_combination: Fraction
    simplified_combination: Fraction
    dbeta_da_fourth: float
    value: float


def beta_fourth_derivative_check() -> BetaRoute:
    """Exact moment arithmetic for the fourth beta-derivative route.

    Evaluates (2 * 12^2 pi / 3^(3/4)) int(-36/f^2 + 639/f^4 - 1800/f^6 + 1260/f^8)
    and the simplified form 9 int f^-4 with f = cosh.
    """
    m = {k: sech_moment_exact(k) for k in range(1, 5)}
    comb = -36 * m[1] + 639 * m[2] - 1800 * m[3] + 1260 * m[4]
    simplified = 9 * m[2]
    # beta = a sqrt(2 - a^2) => dbeta/da at 0 = sqrt(2)
    dbeta = math.sqrt(2.0) ** 4
    value = 2 * 12**2 * math.pi / 3**0.75 * float(comb)
    return BetaRoute(comb, simplified, dbeta, value)


# -- mass derivatives -------------------------------------------------------------

# central second-order stencils: offsets -> weights, for derivative orders 1..4
_STENCILS = {
    1: {-1: -0.5, 1: 0.5},
    2: {-1: 1.0, 0: -2.0, 1: 1.0},
    3: {-2: -0.5, -1: 1.0, 1: -1.0, 2: 0.5},
    4: {-2: 1.0, -1: -4.0, 0: 6.0, 1: -4.0, 2: 1.0},
}


def _even_mass(a: float, grid: Grid) -> float:
    # M(Z(-a)) := M(Z(a)); the beta-negated closed form is Z(|a|) shifted by pi in y
    return so.zaitsev_mass(abs(a), grid)


def mass_derivative_at_zero(order: int, step: float = 0.05, levels: int = 4,
                            grid: Grid | None = None) -> DerivativeEstimate:
    """Richardson-extrapolated central difference of the even extension of a -> M(Z(a))."""
    if order not in _STENCILS:
        raise ValueError("order must be in 1..4")
    grid = grid or Grid(*so.DEFAULT_GRID)
    reach = max(abs(j) for j in _STENCILS[order])
    if reach * step > 0.5:
        raise StepError(f"samples reach a={reach * step:.3g} beyond 0.5")
    m0 = _even_mass(0.0, grid)
    h_min = step / 2 ** (levels - 1)
    noise = 1e-15 * m0 * sum(abs(w) for w in _STENCILS[order].values()) / h_min**order
    if noise > 1e-2 * max(m0, 1.0):
        raise StepError(f"step {step:g} too small for {levels} levels: cancellation noise {noise:.2e}")

    def D(h):
        return sum(w * _even_mass(j * h, grid) for j, w in _STENCILS[order].items()) / h**order

    table = [[D(step / 2**m)] for m in range(levels)]
    for m in range(1, levels):
        for j in range(1, m + 1):
            f = 4.0**j
            table[m].append((f * table[m][j - 1] - table[m - 1][j - 1]) / (f - 1))
    diag = [row[-1] for row in table]
    err = abs(diag[-1] - diag[-2]) if levels > 1 else float("nan")
    return DerivativeEstimate(order, float(diag[-1]), float(step), 2, float(err),
                              tuple(float(d) for d in diag))


def mass_derivative_at(l: float, grid: Grid | None = None, h: float = 1e-3) -> float:
    """dM(Z(a))/da at a = l by a fourth-order central stencil."""
    grid = grid or Grid(*so.DEFAULT_GRID)
    m = {j: _even_mass(l + j * h, grid) for j in (-2, -1, 1, 2)}
    return (m[-2] - 8 * m[-1] + 8 * m[1] - m[2]) / (12 * h)


def line_soliton_mass_speed_derivative(c: float = so.C_CRIT) -> float:
    """d/dc ||Q_c||^2 on R x T, from ||Q_c||^2 = 48 pi c^(3/2)."""
    return 72 * math.pi * math.sqrt(c)


# -- expansions ------------------------------------------------------------------


def gamma0_quartic_fit(a_samples=(0.05, 0.075, 0.1, 0.125, 0.15), grid: Grid | None = None,
                       d4: float | None = None) -> ExpansionFit:
    """Fit gamma_0(a) - 1 = A a^4 + B a^6 and compare A with -d4 / (36 M(Q))."""
    grid = grid or Grid(*so.DEFAULT_GRID)
    if d4 is None:
        d4 = mass_derivative_at_zero(4, grid=grid).value
    ys = [so.gamma_l(0.0, a, grid) - 1 for a in a_samples]
    pred = -d4 / (36 * so.zaitsev_mass(0.0, grid))
    return _fit(4, a_samples, ys, (2,), pred)


def gamma_l_slope_check(l: float = 0.2, grid: Grid | None = None, h: float = 1e-3):
    """(measured slope of gamma_l at a = l, predicted -2 M'(l) / (3 M(l)))."""
    grid = grid or Grid(*so.DEFAULT_GRID)
    slope = (so.gamma_l(l, l + h, grid) - so.gamma_l(l, l - h, grid)) / (2 * h)
    pred = -2 * mass_derivative_at(l, grid) / (3 * so.zaitsev_mass(l, grid))
    return float(slope), float(pred)


def sixth_order_coefficient(d4: float = MASS_D4_PROOF) -> float:
    return 5 * so.speed_second_derivative_at_zero() * d4 / math.factorial(6)


def action_gap_zero(a: float, grid: Grid) -> float:
    """S_c0(Z((a,0), gamma_0(a))) - S_c0(Q_c0) at the critical speed."""
    c0 = so.C_CRIT
    s0 = fn.action(grid, so.zaitsev(0.0, grid), c0).action
    gm = so.gamma_l(0.0, a, grid)
    return fn.action(grid, so.zaitsev_family(grid, a, 0.0, gm), c0).action - s0


def fit_action_sixth_order(a_samples=(0.05, 0.075, 0.1, 0.125, 0.15, 0.175, 0.2),
                           grid: Grid | None = None, predicted: float | None = None,
                           nuisance: bool = True) -> ExpansionFit:
    if len(a_samples) < 4:
        raise ValueError("need at least 4 samples for a stable fit")
    if min(a_samples) < 0.05 - 1e-12 or max(a_samples) > 0.2 + 1e-12:
        raise ValueError("samples must lie in [0.05, 0.2]")
    grid = grid or Grid(*so.DEFAULT_GRID)
    if predicted is None:
        predicted = sixth_order_coefficient()
    ys = [action_gap_zero(a, grid) for a in a_samples]
    return _fit(6, a_samples, ys, (2,) if nuisance else (), predicted)


def quadratic_prediction(l: float, grid: Grid | None = None) -> tuple[float, float, float]:
    """Both terms of the predicted (|a| - l)^2 coefficient, and their sum."""
    grid = grid or Grid(*so.DEFAULT_GRID)
    dM = mass_derivative_at(l, grid)
    Ml = so.zaitsev_mass(l, grid)
    t1 = dM**2 * line_soliton_mass_speed_derivative() / (9 * Ml**2)
    t2 = so.speed_derivative(l) * dM / 2
    return float(t1), float(t2), float(t1 + t2)


def action_gap_l(l: float, a: float, grid: Grid) -> float:
    cl = so.speed(l)
    sl = fn.action(grid, so.zaitsev(l, grid), cl).action
    gm = so.gamma_l(l, a, grid)
    return fn.action(grid, so.zaitsev_family(grid, a, 0.0, gm), cl).action - sl


def fit_action_quadratic(l: float, offsets=(-0.01, -0.0075, -0.005, -0.0025,
                                             0.0025, 0.005, 0.0075, 0.01),
                         grid: Grid | None = None) -> ExpansionFit:
    """Fit S_c(l)(Z(a, gamma_l)) - S_c(l)(Z(l)) = A d^2 + B d^3, d = |a| - l."""
    if not 0 < l <= 0.3:
        raise ValueError("l must lie in (0, 0.3]")
    if len(offsets) < 4:
        raise ValueError("need at least 4 samples")
    grid = grid or Grid(*so.DEFAULT_GRID)
    ys = [action_gap_l(l, l + d, grid) for d in offsets]
    _, _, pred = quadratic_prediction(l, grid)
    return _fit(2, offsets, ys, (1,), pred)
