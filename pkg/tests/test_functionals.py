import math

import numpy as np
import pytest

from kpi_lab import functionals as fn
from kpi_lab import solitons as so
from kpi_lab import spectral as sp
from kpi_lab.spectral import Grid


def test_mass_of_line_soliton(grid):
    Q = so.line_soliton(so.C_CRIT, grid)
    assert fn.mass(grid, Q) == pytest.approx(128 * 3**0.25 * math.pi, rel=1e-12)


@pytest.mark.parametrize("xi_n,k,amp", [(1, 0, 1.0), (2, 1, 0.5), (3, 2, 2.0)])
def test_energy_single_mode(xi_n, k, amp):
    g = Grid(128, 4 * math.pi, 16)
    xi = 2 * math.pi * xi_n / g.lx
    X, Y = g.mesh
    f = amp * np.cos(xi * X) * np.cos(k * Y)
    quarter = g.area / (2 if k == 0 else 4)
    parts = fn.energy_parts(g, f)
    assert parts.gradient == pytest.approx(xi**2 * amp**2 * quarter, rel=1e-12)
    assert parts.nonlocal_ == pytest.approx(k**2 / xi**2 * amp**2 * quarter, rel=1e-12, abs=1e-12)
    assert abs(parts.cubic) < 1e-10
    assert fn.energy(g, f) == pytest.approx(parts.total)


def test_energy_cubic_term():
    g = Grid(128, 2 * math.pi, 8)
    X, _ = g.mesh
    f = np.cos(X) + np.cos(2 * X)
    # integral of (cos x + cos 2x)^3 over [0, 2pi) is 3 pi / 2 per unit y length
    assert fn.energy_parts(g, f).cubic == pytest.approx(-(1.5 * math.pi * 2 * math.pi) / 3, rel=1e-12)


def test_energy_rejects_nonzero_mean_columns():
    g = Grid(64, 2 * math.pi, 8)
    _, Y = g.mesh
    with pytest.raises(sp.MeanError):
        fn.energy(g, np.cos(Y))


def test_action_identity(grid):
    Z = so.zaitsev(0.2, grid)
    c = so.speed(0.2)
    r = fn.action(grid, Z, c)
    assert r.action == pytest.approx(r.energy + c * r.mass, rel=1e-15)
    assert r.speed_used == c
    assert set(r.to_dict()) == {"mass", "energy", "action", "speed_used"}


@pytest.mark.parametrize("a", [0.0, 0.2])
def test_functionals_translation_invariant(grid, a):
    Z = so.zaitsev(a, grid)
    Zs = sp.shift(grid, Z, 5.3, 0.9)
    assert fn.mass(grid, Zs) == pytest.approx(fn.mass(grid, Z), rel=1e-12)
    assert fn.energy(grid, Zs) == pytest.approx(fn.energy(grid, Z), rel=1e-10)


def test_stationary_residual_detects_non_solution(grid):
    Q = so.line_soliton(so.C_CRIT, grid)
    assert np.abs(fn.stationary_residual(grid, 2 * Q, so.C_CRIT)).max() > 1.0
    assert np.abs(fn.stationary_residual(grid, Q, so.C_CRIT + 0.1)).max() > 0.1


def test_dist_zero_on_orbit(grid):
    Z = so.zaitsev(0.3, grid)
    d = fn.dist_to_orbit(grid, sp.shift(grid, Z, 3.7, 1.2), Z)
    assert d.dist < 1e-8
    assert d.x0 == pytest.approx(3.7, abs=1e-8)
    assert d.y0 == pytest.approx(1.2, abs=1e-8)


def test_dist_bounded_by_unshifted_norm(grid, rng):
    Z = so.zaitsev(0.2, grid)
    w = sp.antideriv_x(grid, sp.deriv_x(grid, rng.standard_normal((grid.nx, grid.ny))))
    f = Z + 0.05 * sp.shift(grid, w, 1.0, 0.0)
    d = fn.dist_to_orbit(grid, f, Z)
    assert d.dist <= sp.z1_norm(grid, f - Z, strict=False) + 1e-12


def test_dist_matches_dense_shift_search():
    g = Grid(128, 40.0, 16)
    rng = np.random.default_rng(3)
    Z = so.zaitsev(0.4, g)
    f = sp.shift(g, Z, 1.3, 0.4) + 0.2 * np.exp(-(g.mesh[0] - 2) ** 2) * rng.standard_normal((1, g.ny))
    d = fn.dist_to_orbit(g, f, Z)
    brute = min(sp.z1_norm(g, f - sp.shift(g, Z, x0, y0), strict=False)
                for x0 in np.linspace(0.8, 1.8, 41) for y0 in np.linspace(0.0, 0.8, 33))
    assert d.dist <= brute + 1e-10
    assert d.dist > 0.5 * brute


def test_dist_l_uses_family_member(grid):
    Z = so.zaitsev(0.1, grid)
    assert fn.dist_l(grid, Z, 0.1).dist < 1e-9
    assert fn.dist_l(grid, Z, 0.3).dist > 1.0
