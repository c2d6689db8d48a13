import math

import numpy as np
import pytest

from kpi_lab import functionals as fn
from kpi_lab import solitons as so
from kpi_lab import spectral as sp
from kpi_lab.solitons import SolitonParams
from kpi_lab.spectral import Grid


def test_speed_values():
    assert so.speed(0.0) == pytest.approx(4 / math.sqrt(3), rel=1e-15)
    assert so.speed(0.5) == pytest.approx(3.5625 / (math.sqrt(3) * 0.75), rel=1e-15)
    assert so.speed(0.5) == pytest.approx(2.742414, abs=1e-6)


@pytest.mark.parametrize("a", [1.0, 1.2, -0.1])
def test_speed_rejects(a):
    with pytest.raises(ValueError):
        so.speed(a)


def test_speed_even_increasing():
    a = np.linspace(0, 0.9, 50)
    c = [so.speed(x) for x in a]
    assert np.all(np.diff(c) > 0)
    h = 1e-3
    fd = (so.speed(0.3 + h) - so.speed(0.3 - h)) / (2 * h)
    assert so.speed_derivative(0.3) == pytest.approx(fd, rel=1e-5)


def _even_speed(a):
    return so.speed(abs(a))


def test_speed_second_derivative_at_zero():
    h = 1e-3
    f = {j: _even_speed(j * h) for j in (-2, -1, 0, 1, 2)}
    d2 = (-f[-2] + 16 * f[-1] - 30 * f[0] + 16 * f[1] - f[2]) / (12 * h * h)
    d1 = (f[-2] - 8 * f[-1] + 8 * f[1] - f[2]) / (12 * h)
    assert so.speed_second_derivative_at_zero() == pytest.approx(4 / math.sqrt(3))
    assert abs(d2 - so.speed_second_derivative_at_zero()) < 1e-8
    assert abs(d1) < 1e-10


def test_line_soliton_peaks(grid):
    Q = so.line_soliton(so.C_CRIT, grid)
    assert Q[grid.nx // 2, 0] == pytest.approx(4 * math.sqrt(3), rel=1e-15)
    assert so.line_soliton(1.0, grid)[grid.nx // 2, 3] == pytest.approx(3.0)
    assert np.all(Q == Q[:, :1])
    assert int(np.argmax(Q[:, 0])) == grid.nx // 2
    with pytest.raises(ValueError):
        so.line_soliton(0.0, grid)


def test_line_soliton_solves_stationary_equation(grid):
    r = fn.stationary_residual(grid, so.line_soliton(1.0, grid), 1.0)
    assert np.abs(r).max() < 1e-8


def test_zaitsev_zero_is_line_soliton(grid):
    assert np.abs(so.zaitsev(0.0, grid) - so.line_soliton(so.C_CRIT, grid)).max() < 1e-12


def test_zaitsev_value_at_origin(grid):
    b = 0.5 * math.sqrt(1.75)
    expected = 12 * 0.75 * (1 - b) / (math.sqrt(3) * (1 - b) ** 2)
    assert so.zaitsev(0.5, grid)[grid.nx // 2, 0] == pytest.approx(expected, rel=1e-13)
    assert expected == pytest.approx(15.347705, rel=1e-7)


@pytest.mark.parametrize("a", [0.0, 0.1, 0.3, 0.5])
def test_zaitsev_solves_stationary_equation(grid, a):
    r = fn.stationary_residual(grid, so.zaitsev(a, grid), so.speed(a))
    assert np.abs(r).max() < 1e-8


@pytest.mark.parametrize("a", [-0.1, 1.0])
def test_zaitsev_rejects(grid, a):
    with pytest.raises(ValueError):
        so.zaitsev(a, grid)


def test_zaitsev_symmetries(grid):
    Z = so.zaitsev(0.4, grid)
    assert np.abs(Z[1:] - Z[:0:-1]).max() < 1e-12  # even in x
    assert np.abs(Z[:, 1:] - Z[:, :0:-1]).max() < 1e-12  # even in y


def test_negated_beta_is_half_period_shift(grid):
    a = 0.3
    neg = so.zaitsev_signed(-a, grid)
    rolled = np.roll(so.zaitsev(a, grid), grid.ny // 2, axis=1)
    assert np.abs(neg - rolled).max() < 1e-12
    assert so.zaitsev_mass(-a, grid) == pytest.approx(so.zaitsev_mass(a, grid), rel=1e-14)


def test_scaled_theta_zero_identity(grid):
    p = SolitonParams((0.3, 0.0))
    assert np.array_equal(so.scaled_zaitsev(p, grid), so.zaitsev(0.3, grid))


def test_scaled_quarter_turn(grid):
    a = 0.3
    f = so.scaled_zaitsev(SolitonParams((0.0, a)), grid)
    # y -> y + pi/2 is a rotation by ny/4 indices
    assert np.abs(f - np.roll(so.zaitsev(a, grid), -grid.ny // 4, axis=1)).max() < 1e-12


def test_scaled_general_matches_definition(grid):
    a1, a2, gam, rho = 0.2, -0.15, 1.3, 2.5
    a, th = math.hypot(a1, a2), math.atan2(a2, a1)
    f = so.scaled_zaitsev(SolitonParams((a1, a2), gam, rho), grid)
    X, Y = grid.mesh
    s = math.sqrt(1 - a * a) * so.S4
    b = a * math.sqrt(2 - a * a)
    xs = math.sqrt(gam) * (X - rho)
    C = np.cosh(s * xs)
    ref = gam * 12 * (1 - a * a) * (1 - b * C * np.cos(Y + th)) / (math.sqrt(3) * (C - b * np.cos(Y + th)) ** 2)
    assert np.abs(f - ref).max() < 1e-11


@pytest.mark.parametrize("gam", [0.8, 1.0, 1.25])
def test_mass_scaling_law(grid, gam):
    p = SolitonParams((0.12, -0.05), gam)
    m = fn.mass(grid, so.scaled_zaitsev(p, grid))
    assert m / so.zaitsev_mass(p.a, grid) == pytest.approx(gam**1.5, rel=1e-10)


def test_soliton_params_validation():
    with pytest.raises(ValueError):
        SolitonParams((0.8, 0.8))
    with pytest.raises(ValueError):
        SolitonParams((0.1, 0.0), 0.0)
    assert SolitonParams().theta == 0.0
    assert SolitonParams((0.0, 0.2)).theta == pytest.approx(math.pi / 2)


def test_family_tangents_match_finite_differences(grid):
    a1, a2, gam, rho = 0.1, 0.05, 1.1, 0.7
    t = so.family_tangents(grid, a1, a2, gam, rho)
    h = 1e-5
    F = lambda **kw: so.zaitsev_family(grid, **{**dict(a1=a1, a2=a2, gamma=gam, rho=rho), **kw})
    fd = {"dgamma": (F(gamma=gam + h) - F(gamma=gam - h)) / (2 * h),
          "da1": (F(a1=a1 + h) - F(a1=a1 - h)) / (2 * h),
          "da2": (F(a2=a2 + h) - F(a2=a2 - h)) / (2 * h),
          "dx": -(F(rho=rho + h) - F(rho=rho - h)) / (2 * h)}
    for k, v in fd.items():
        assert np.abs(t[k] - v).max() < 1e-7, k
    assert np.abs(t["Z"] - F()).max() < 1e-13


def test_vstar_antideriv_values(grid):
    va = so.vstar_antideriv(grid)
    assert va[grid.nx // 2] == 0.0
    peak = 6 * math.sqrt(2) / 3**0.25
    assert peak == pytest.approx(6.447420, abs=1e-6)
    # the maximum sits where tanh^2 = 1/2
    xm = math.atanh(math.sqrt(0.5)) / so.S4
    assert so.vstar_antideriv(Grid(8, 2 * xm * 4, 8))[5] == pytest.approx(peak, rel=1e-12)
    assert va.max() == pytest.approx(peak, rel=1e-3)


def test_vstar_matches_branch_derivative(grid):
    h = 1e-3
    z = {j: so.zaitsev_signed(j * h, grid) for j in (-2, -1, 1, 2)}
    dz = (z[-2] - 8 * z[-1] + 8 * z[1] - z[2]) / (12 * h)
    assert np.abs(so.vstar(grid) - so.cos_y_coefficient(grid, dz)).max() < 1e-6
    assert np.abs(so.sin_y_coefficient(grid, dz)).max() < 1e-12
    assert np.abs(so.vstar(grid) - so.vstar_closed_form(grid)).max() < 1e-10


def test_g_mu_basics(grid):
    assert np.all(so.g_mu(0.0, grid) == 0.0)
    assert so.g_mu_dx(1.0, grid)[grid.nx // 2] == 0.0
    # g_1 = 3 sech(x / 3^(1/4))
    assert np.abs(so.g_mu(1.0, grid) - 3 / np.cosh(so.S4 * grid.x)).max() < 1e-13
    with pytest.raises(OverflowError):
        so.g_mu(40.0, grid)
    with pytest.raises(ValueError):
        so.g_mu(float("nan"), grid)


def test_dx_g1_closed_form(grid):
    x = grid.x
    exact = -3 * so.S4 * np.sinh(so.S4 * x) / np.cosh(so.S4 * x) ** 2
    assert np.abs(so.g_mu_dx(1.0, grid) - exact).max() < 1e-14
    # proportional to the branch antiderivative, with factor -1/(4 sqrt 2)
    assert np.abs(so.g_mu_dx(1.0, grid) + so.vstar_antideriv(grid) / (4 * math.sqrt(2))).max() < 1e-10


@pytest.mark.parametrize("mu", [-1.7, -0.5, 0.3, 1.0, 1.7])
def test_g_mu_dx_matches_local_derivative(mu):
    g = Grid(4096, 10.0, 8)
    d = np.gradient(so.g_mu(mu, g), g.dx, edge_order=2)
    inner = slice(10, -10)
    scale = np.abs(d[inner]).max()
    assert np.abs(so.g_mu_dx(mu, g)[inner] - d[inner]).max() < 1e-5 * scale


def test_g_degenerate_vanishing_pair(grid):
    # g_mu + g_-mu vanishes identically at mu = 1, so the quotient has a finite limit
    x = np.linspace(-3, 3, 7)
    pair = so._g_mu_dx(1.0, x) + so._g_mu_dx(-1.0, x)
    assert np.abs(pair).max() < 1e-13
    deg = so.g_mu_degenerate(Grid(256, 10.0, 8))
    assert np.all(np.isfinite(deg))


def test_gamma_l_identities(grid):
    assert so.gamma_l(0.2, 0.2, grid) == 1.0
    for l, a in ((0.0, 0.1), (0.1, 0.25)):
        g = so.gamma_l(l, a, grid)
        m = fn.mass(grid, so.zaitsev_family(grid, a, 0.0, g))
        assert m == pytest.approx(so.zaitsev_mass(l, grid), rel=1e-10)


def test_mass_of_line_soliton(grid):
    assert so.zaitsev_mass(0.0, grid) == pytest.approx(128 * 3**0.25 * math.pi, rel=1e-12)
    assert 128 * 3**0.25 * math.pi == pytest.approx(529.2248, abs=1e-4)
