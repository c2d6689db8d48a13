import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kpi_lab import spectral as sp
from kpi_lab.spectral import Grid, MeanError


def mean_zero_field(grid, seed, band=6):
    rng = np.random.default_rng(seed)
    c = np.zeros((grid.nx, grid.ny), dtype=complex)
    c[1:band, :band] = rng.standard_normal((band - 1, band)) + 1j * rng.standard_normal((band - 1, band))
    return np.real(np.fft.ifft2(c)) * grid.nx * grid.ny


def test_make_grid_nodes_and_wavenumbers():
    g = sp.make_grid(8, 2 * np.pi, 8)
    assert np.allclose(g.x, -np.pi + np.arange(8) * np.pi / 4)
    assert np.allclose(np.sort(g.xi), np.arange(-4, 4))
    assert np.allclose(g.y, np.arange(8) * 2 * np.pi / 8)
    assert np.allclose(np.sort(g.k), np.arange(-4, 4))


def test_make_grid_production():
    g = sp.make_grid(1024, 80, 32)
    assert (g.nx, g.lx, g.ny) == (1024, 80.0, 32)
    assert g.area == pytest.approx(160 * np.pi)


@pytest.mark.parametrize("args", [(7, 2 * np.pi, 8), (8, 0.0, 8), (8, 1.0, 6), (22, 1.0, 8)])
def test_make_grid_rejects(args):
    with pytest.raises(ValueError):
        sp.make_grid(*args)


def test_deriv_single_mode():
    g = Grid(64, 10.0, 8)
    w = 2 * np.pi / g.lx
    f = np.sin(w * g.x)
    assert np.abs(sp.deriv_x(g, f) - w * np.cos(w * g.x)).max() < 1e-12


def test_deriv_constant_is_zero():
    g = Grid(32, 5.0, 8)
    for order in (1, 2, 3):
        assert np.abs(sp.deriv_x(g, np.full((32, 8), 2.5), order)).max() < 1e-13


def test_deriv_sech2_second_order():
    g = Grid(1024, 80.0, 8)
    s = 3**-0.25
    f = 1 / np.cosh(s * g.x) ** 2
    t = np.tanh(s * g.x)
    exact = s * s * (1 - t * t) * (6 * t * t - 2)
    assert np.abs(sp.deriv_x(g, f, 2) - exact).max() < 1e-8


def test_deriv_odd_order_drops_nyquist():
    g = Grid(16, 2 * np.pi, 8)
    f = np.cos(8 * g.x)  # pure Nyquist
    assert np.abs(sp.deriv_x(g, f, 1)).max() < 1e-14
    assert np.abs(sp.deriv_x(g, f, 2) + 64 * f).max() < 1e-10


def test_antideriv_single_mode():
    g = Grid(64, 12.0, 8)
    w = 2 * np.pi / g.lx
    out = sp.antideriv_x(g, np.cos(w * g.x))
    assert np.abs(out - np.sin(w * g.x) / w).max() < 1e-12


def test_antideriv_rejects_mean():
    g = Grid(32, 6.0, 8)
    with pytest.raises(MeanError):
        sp.antideriv_x(g, 0.1 + np.cos(2 * np.pi * g.x / g.lx))


def test_antideriv_decaying_vanishes_at_edge():
    g = Grid(256, 40.0, 8)
    f = -2 * g.x * np.exp(-g.x**2)  # derivative of a Gaussian
    F = sp.antideriv_x_decaying(g, f, 1)
    assert abs(F[0]) < 1e-14
    assert np.abs(F - np.exp(-g.x**2)).max() < 1e-10


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), order=st.integers(1, 3))
def test_antideriv_deriv_round_trip(seed, order):
    g = Grid(64, 9.0, 16)
    f = mean_zero_field(g, seed)
    scale = max(1, np.abs(f).max())
    assert np.abs(sp.antideriv_x(g, sp.deriv_x(g, f, order), order) - f).max() < 1e-12 * scale
    # the other composition lifts roundoff in the empty high modes by xi^order
    assert np.abs(sp.deriv_x(g, sp.antideriv_x(g, f)) - f).max() < 1e-12 * scale


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_parseval(seed):
    g = Grid(32, 7.0, 16)
    f = np.random.default_rng(seed).standard_normal((32, 16))
    c = sp.fft(g, f)
    assert sp.integrate(g, f * f) == pytest.approx(g.area * np.sum(np.abs(c) ** 2), rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_z1_dominates_l2(seed):
    g = Grid(32, 7.0, 16)
    f = mean_zero_field(g, seed)
    assert sp.z1_norm(g, f) >= np.sqrt(sp.integrate(g, f * f)) * (1 - 1e-12)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), m=st.integers(1, 15))
def test_y_translation_commutes(seed, m):
    g = Grid(32, 7.0, 16)
    f = mean_zero_field(g, seed)
    roll = lambda h: np.roll(h, m, axis=1)
    assert np.abs(sp.deriv_x(g, roll(f)) - roll(sp.deriv_x(g, f))).max() < 1e-12
    assert np.abs(sp.antideriv_x(g, roll(f)) - roll(sp.antideriv_x(g, f))).max() < 1e-12
    assert sp.z1_norm(g, roll(f)) == pytest.approx(sp.z1_norm(g, f), rel=1e-12)
    assert np.abs(sp.shift(g, f, 0.0, m * g.dy) - roll(f)).max() < 1e-12


def test_z1_cos_x():
    g = Grid(16, 2 * np.pi, 8)
    f = np.repeat(np.cos(g.x)[:, None], 8, axis=1)
    assert sp.z1_norm(g, f) ** 2 == pytest.approx(8 * np.pi**2, rel=1e-12)


def test_z1_zero():
    g = Grid(16, 2 * np.pi, 8)
    assert sp.z1_norm(g, g.zeros()) == 0.0


def test_z1_sin_y_cos_x():
    g = Grid(16, 2 * np.pi, 8)
    X, Y = g.mesh
    f = np.sin(Y) * np.cos(X)
    assert sp.z1_norm(g, f) ** 2 == pytest.approx(9 * sp.integrate(g, f * f), rel=1e-12)


def test_z1_strict_rejects_y_dependent_mean():
    g = Grid(16, 2 * np.pi, 8)
    X, Y = g.mesh
    f = np.cos(Y) + np.cos(X)
    with pytest.raises(MeanError):
        sp.z1_norm(g, f)
    # the non-strict form measures the xi = 0 column at weight 1
    main, zero = sp.z1_parts(g, f)
    assert zero == pytest.approx(sp.integrate(g, np.cos(Y) ** 2), rel=1e-12)
    assert main == pytest.approx(4 * sp.integrate(g, np.cos(X) ** 2), rel=1e-12)


def test_integrate_constant_area():
    g = Grid(64, 80.0, 16)
    assert sp.integrate(g, np.ones((64, 16))) == pytest.approx(160 * np.pi, rel=1e-14)


def test_integrate_sech2():
    g = Grid(1024, 80.0, 8)
    s = 3**-0.25
    assert abs(sp.integrate_x(g, 1 / np.cosh(s * g.x) ** 2) - 2 * 3**0.25) < 1e-10


def test_integrate_odd_profile():
    g = Grid(256, 20.0, 8)
    assert abs(sp.integrate_x(g, g.x * np.exp(-g.x**2))) < 1e-12


def test_shift_round_trip():
    g = Grid(128, 20.0, 16)
    X, Y = g.mesh
    f = np.exp(-(X**2)) * (1 + 0.3 * np.cos(Y))
    back = sp.shift(g, sp.shift(g, f, 1.37, 0.4), -1.37, -0.4)
    assert np.abs(back - f).max() < 1e-12
    moved = sp.shift(g, f, 1.37, 0.0)
    assert np.abs(moved - np.exp(-((X - 1.37) ** 2)) * (1 + 0.3 * np.cos(Y))).max() < 1e-10


def test_integrate_cube_alias_free():
    g = Grid(16, 2 * np.pi, 8)
    X, _ = g.mesh
    f = np.cos(5 * X) + np.cos(6 * X)
    # the cube has no constant term, but 5 + 5 + 6 = 16 aliases onto it on 16 points
    assert abs(sp.integrate(g, f**3)) > 1.0
    assert abs(sp.integrate_cube(g, f)) < 1e-12
    h = np.cos(X) + 0.5
    exact = 2 * np.pi * 2 * np.pi * (0.125 + 3 * 0.5 * 0.5)
    assert sp.integrate_cube(g, h) == pytest.approx(exact, rel=1e-12)
