"""Static modulation decomposition around the scaled Zaitsev family.

A field ``u`` near the orbit is written as ``u(x + rho, y) = Z(a, gamma)(x, y) + eta``
with ``eta`` L2-orthogonal to Z, d_x Z, d_a1 Z and d_a2 Z at the recovered
parameters. The four inner products form the system G solved by Newton.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import functionals as fn
from . import solitons as so
from . import spectral as sp
from .solitons import SolitonParams
from .spectral import Grid

MAX_ITER = 50
ORTHO_TOL = 1e-10
FD_STEP = 1e-6
MODULATION_GRID = (512, 80.0, 32)


class ConvergenceError(RuntimeError):
    def __init__(self, msg, residuals=None, iterations=0):
        super().__init__(msg)
        self.residuals = residuals
        self.iterations = iterations


@dataclass
class ModulationState:
    params: SolitonParams
    eta: np.ndarray
    ortho_residuals: tuple[float, float, float, float]
    newton_iterations: int
    residual_history: list[float] = field(default_factory=list)
    scale: float = 1.0

    @property
    def gamma(self) -> float:
        return self.params.gamma

    @property
    def rho(self) -> float:
        return self.params.rho

    @property
    def a_vec(self) -> tuple[float, float]:
        return self.params.a_vec

    def to_dict(self, grid: Grid) -> dict:
        main, zero = sp.z1_parts(grid, self.eta)
        return {
            "gamma": self.gamma,
            "rho": self.rho,
            "a_vec": list(self.a_vec),
            "a": self.params.a,
            "ortho_residuals": list(self.ortho_residuals),
            "newton_iterations": self.newton_iterations,
            "residual_history": list(self.residual_history),
            "eta_l2": float(np.sqrt(fn.mass(grid, self.eta))),
            "eta_z1": float(np.sqrt(main + zero)),
            "eta_z1_zero_column": float(np.sqrt(zero)),
        }


def _unpack(p):
    g, r, a1, a2 = (float(v) for v in p)
    return g, r, a1, a2


def _valid(p) -> bool:
    g, _, a1, a2 = _unpack(p)
    return g > 0 and a1 * a1 + a2 * a2 < 0.95


def _G_shifted(grid: Grid, us: np.ndarray, gamma, a1, a2) -> np.ndarray:
    # us is u(. + rho); the tangents are evaluated at rho = 0
    t = so.family_tangents(grid, a1, a2, gamma)
    eta = us - t["Z"]
    return np.array([sp.inner(grid, eta, t[k]) for k in ("Z", "dx", "da1", "da2")])


def residual_G(grid: Grid, u: np.ndarray, gamma: float, rho: float,
               a_vec=(0.0, 0.0)) -> np.ndarray:
    """The four orthogonality residuals of u(. + rho) - Z(a, gamma)."""
    SolitonParams(tuple(a_vec), gamma, rho)  # validates
    us = sp.shift(grid, u, -rho)
    return _G_shifted(grid, us, gamma, *a_vec)


def _G(grid, u, p, cache):
    g, r, a1, a2 = _unpack(p)
    if r not in cache:
        cache.clear()
        cache[r] = sp.shift(grid, u, -r)
    return _G_shifted(grid, cache[r], g, a1, a2)


def _jacobian(grid, u, p, cache, h=FD_STEP):
    J = np.empty((4, 4))
    for j in range(4):
        e = np.zeros(4)
        e[j] = h
        J[:, j] = (_G(grid, u, p + e, cache) - _G(grid, u, p - e, cache)) / (2 * h)
    return J


def initial_guess(grid: Grid, u: np.ndarray) -> SolitonParams:
    """Coarse scan: centre from the y-averaged profile, branch angle from the
    first y-harmonic, |a| and gamma by a mass-matched scan."""
    prof = u.mean(axis=1)
    j = int(np.argmax(prof))
    # parabolic refinement of the peak
    f0, fm, fp = prof[j], prof[j - 1], prof[(j + 1) % grid.nx]
    den = fm - 2 * f0 + fp
    off = 0.5 * (fm - fp) / den if den < 0 else 0.0
    rho = float(grid.x[j] + off * grid.dx)
    us = sp.shift(grid, u, -rho)
    v = so.vstar(grid)[:, None]
    p1 = sp.inner(grid, us, v * np.cos(grid.y)[None, :])
    p2 = sp.inner(grid, us, v * np.sin(grid.y)[None, :])
    theta = float(np.arctan2(-p2, p1))
    m_u = fn.mass(grid, u)
    best = None
    for a in np.linspace(0.0, 0.6, 25):
        gam = (m_u / so.zaitsev_mass(float(a), grid)) ** (2.0 / 3.0)
        z = so.zaitsev_family(grid, a * np.cos(theta), a * np.sin(theta), gam)
        err = fn.mass(grid, us - z)
        if best is None or err < best[0]:
            best = (err, a, gam)
    _, a, gam = best
    return SolitonParams((float(a * np.cos(theta)), float(a * np.sin(theta))), float(gam), rho)


def decompose(grid: Grid, u: np.ndarray, initial: SolitonParams | None = None,
              max_iter: int = MAX_ITER, tol: float = ORTHO_TOL) -> ModulationState:
    """Solve G = 0 by damped Newton with a central-difference Jacobian."""
    if not np.all(np.isfinite(u)):
        raise ValueError("field has non-finite entries")
    guess = initial or initial_guess(grid, u)
    p = np.array([guess.gamma, guess.rho, *guess.a_vec], dtype=float)
    cache: dict = {}
    scale = fn.mass(grid, so.scaled_zaitsev(SolitonParams(guess.a_vec, guess.gamma), grid))
    G = _G(grid, u, p, cache)
    hist = [float(np.abs(G).max())]
    it = 0
    while it < max_iter:
        if hist[-1] < 1e-3 * tol * scale:
            break
        J = _jacobian(grid, u, p, cache)
        try:
            dp = np.linalg.solve(J, -G)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(f"singular Jacobian: {exc}", G, it) from exc
        it += 1
        lam, accepted = 1.0, None
        while lam > 1e-6:
            trial = p + lam * dp
            if _valid(trial):
                Gt = _G(grid, u, trial, cache)
                if np.abs(Gt).max() < hist[-1]:
                    accepted = (trial, Gt)
                    break
            lam *= 0.5
        if accepted is None:
            break  # stalled at the roundoff floor (or genuinely stuck)
        p, G = accepted
        hist.append(float(np.abs(G).max()))
    if hist[-1] >= tol * scale:
        raise ConvergenceError(f"no convergence after {it} iterations "
                               f"(residual {hist[-1]:.3e})", G, it)
    g, r, a1, a2 = _unpack(p)
    r = (r + grid.lx / 2) % grid.lx - grid.lx / 2
    params = SolitonParams((a1, a2), g, r)
    eta = sp.shift(grid, u, -r) - so.scaled_zaitsev(SolitonParams((a1, a2), g), grid)
    return ModulationState(params, eta, tuple(float(v) for v in G), it, hist, float(scale))


def reconstruct(grid: Grid, state: ModulationState) -> np.ndarray:
    """u from (params, eta): Z(a, gamma) + eta translated back by rho."""
    base = so.scaled_zaitsev(SolitonParams(state.a_vec, state.gamma), grid)
    return sp.shift(grid, base + state.eta, state.rho)


def eta_z1(grid: Grid, eta: np.ndarray) -> float:
    """Z1 norm of eta with its xi = 0 column measured at weight 1."""
    return sp.z1_norm(grid, eta, strict=False)


def modulation_bound_ratio(grid: Grid, u: np.ndarray, state: ModulationState) -> float:
    """(||eta||_Z1 + |gamma - 1| + |a|) / dist_0(u), the empirical K1."""
    d = fn.dist_l(grid, u, 0.0).dist
    lhs = eta_z1(grid, state.eta) + abs(state.gamma - 1) + state.params.a
    return float(lhs / d) if d > 0 else float("inf") if lhs > 0 else 0.0


# -- sample families ----------------------------------------------------------


def band_limited_bump(grid: Grid, rng: np.random.Generator, xi_max: float = 2.0,
                      k_max: int = 3, width: float = 8.0) -> np.ndarray:
    """Seeded smooth perturbation localised near x = 0, with zero x-mean on every y-line.

    Random coefficients on 0 < |xi| <= xi_max, |k| <= k_max, times a Gaussian
    envelope; unit L2 norm.
    """
    c = np.zeros((grid.nx, grid.ny), dtype=complex)
    mask = (np.abs(grid.xi)[:, None] <= xi_max) & (np.abs(grid.k)[None, :] <= k_max)
    mask[0, :] = False
    n = int(mask.sum())
    c[mask] = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    f = sp.ifft(grid, c)
    f = f * np.exp(-(grid.x[:, None] / width) ** 2 / 2)
    c = sp.fft(grid, f)
    c[0, :] = 0.0
    f = sp.ifft(grid, c)
    return f / np.sqrt(fn.mass(grid, f))


def orthogonalize(grid: Grid, w: np.ndarray, params: SolitonParams) -> np.ndarray:
    """Remove from w its L2 projection onto the four modulation directions."""
    t = so.family_tangents(grid, *params.a_vec, params.gamma)
    dirs = [sp.shift(grid, t[k], params.rho) for k in ("Z", "dx", "da1", "da2")]
    gram = np.array([[sp.inner(grid, a, b) for b in dirs] for a in dirs])
    rhs = np.array([sp.inner(grid, w, d) for d in dirs])
    coef = np.linalg.solve(gram, rhs)
    return w - sum(cf * d for cf, d in zip(coef, dirs))


def mass_rescale(grid: Grid, u: np.ndarray, target: float) -> np.ndarray:
    return u * np.sqrt(target / fn.mass(grid, u))


def perturbed_sample(grid: Grid, l: float, delta: float, seed: int) -> np.ndarray:
    """Z(l) + delta * (orthogonalised bump), rescaled to the mass of Z(l)."""
    rng = np.random.default_rng(seed)
    base = so.zaitsev(l, grid)
    w = orthogonalize(grid, band_limited_bump(grid, rng), SolitonParams((l, 0.0)))
    w = w / np.sqrt(fn.mass(grid, w))
    return mass_rescale(grid, base + delta * w, so.zaitsev_mass(l, grid))


# -- inequality checks ------------------------------------------------------


@dataclass(frozen=True)
class GapReport:
    gap: float
    eta_mass: float
    ratio: float
    gamma_excess: float  # gamma_l(|a(u)|) - gamma(u)

    def to_dict(self) -> dict:
        return dict(gap=self.gap, eta_mass=self.eta_mass, ratio=self.ratio,
                    gamma_excess=self.gamma_excess)


def scaling_gap_check(grid: Grid, u: np.ndarray, l: float,
                     state: ModulationState | None = None) -> GapReport:
    """Z1 gap between the mass-matched and the recovered scaling, against ||eta||^2."""
    target = so.zaitsev_mass(l, grid)
    if abs(fn.mass(grid, u) - target) > 1e-10 * target:
        raise ValueError("u must carry the mass of Z(l) (rescale it first)")
    st = state or decompose(grid, u)
    gl = so.gamma_l(l, st.params.a, grid)
    za = so.scaled_zaitsev(SolitonParams(st.a_vec, gl), grid)
    zg = so.scaled_zaitsev(SolitonParams(st.a_vec, st.gamma), grid)
    gap = sp.z1_norm(grid, za - zg, strict=False)
    em = fn.mass(grid, st.eta)
    ratio = gap / em if em > 0 else (0.0 if gap == 0 else float("inf"))
    return GapReport(float(gap), float(em), float(ratio), float(gl - st.gamma))


@dataclass(frozen=True)
class LyapunovReport:
    l: float
    lhs: float
    a_term: float
    eta_term: float
    k: float

    def to_dict(self) -> dict:
        return dict(l=self.l, lhs=self.lhs, a_term=self.a_term, eta_term=self.eta_term,
                    k=self.k)


def lyapunov_inequality_check(grid: Grid, u: np.ndarray, l: float,
                              state: ModulationState | None = None) -> LyapunovReport:
    """Action excess over Z(l) against |a|^6 (l = 0) or (|a| - l)^2, plus ||eta||^2_Z1."""
    if l < 0:
        raise ValueError("l must be >= 0")
    c = so.speed(l)
    lhs = fn.action(grid, u, c).action - fn.action(grid, so.zaitsev(l, grid), c).action
    st = state or decompose(grid, u)
    a = st.params.a
    a_term = a**6 if l == 0 else (a - l) ** 2
    eta_term = eta_z1(grid, st.eta) ** 2
    rhs = a_term + eta_term
    k = lhs / rhs if rhs > 0 else (0.0 if abs(lhs) < 1e-12 else float("inf"))
    return LyapunovReport(float(l), float(lhs), float(a_term), float(eta_term), float(k))
