"""Time integration of KP-I in the once-integrated form

    u_t = -u_xxx - u u_x + d_x^{-1} u_yy

by integrating-factor RK4: the linear symbol i (xi^3 + k^2 / xi) is applied as
an exact phase rotation and RK4 acts on the (2/3-dealiased) nonlinearity.
Coefficients with xi = 0 are frozen: zero for k != 0 (projected at start),
and the conserved (0, 0) mean at its initial value.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.fft as sfft

from . import functionals as fn
from . import modulation as md
from . import solitons as so
from . import spectral as sp
from .spectral import Grid

EVOLVE_GRID = (1024, 80.0, 32)
STABILITY_GRID = (512, 80.0, 32)
BLOWUP_FACTOR = 100.0


class BlowUpError(RuntimeError):
    def __init__(self, msg, t=None, max_abs=None):
        super().__init__(msg)
        self.t = t
        self.max_abs = max_abs


@dataclass(frozen=True)
class EvolutionConfig:
    dt: float = 1e-3
    t_end: float = 10.0
    dealias: bool = True
    observer_stride: int = 50
    scheme: str = "if-rk4"
    track_modulation: bool = False

    def __post_init__(self):
        if not self.dt > 0 or not np.isfinite(self.dt):
            raise ValueError("dt must be positive")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if int(self.observer_stride) != self.observer_stride or self.observer_stride < 1:
            raise ValueError("observer_stride must be a positive integer")
        if self.scheme != "if-rk4":
            raise ValueError(f"unknown scheme {self.scheme!r}")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass
class TrajectoryReport:
    times: list[float] = field(default_factory=list)
    mass_series: list[float] = field(default_factory=list)
    energy_series: list[float] = field(default_factory=list)
    dist_series: list[float] = field(default_factory=list)
    shift_series: list[float] = field(default_factory=list)
    tail_series: list[float] = field(default_factory=list)
    modulation_series: list[dict] = field(default_factory=list)
    cfl: dict = field(default_factory=dict)
    wall_time: float = 0.0

    @property
    def max_dist(self) -> float:
        return max(self.dist_series) if self.dist_series else 0.0

    def drift(self, series: str) -> float:
        s = np.asarray(getattr(self, series))
        return float(np.abs(s - s[0]).max() / abs(s[0]))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["max_dist"] = self.max_dist
        d["mass_drift"] = self.drift("mass_series") if self.mass_series else None
        d["energy_drift"] = self.drift("energy_series") if self.energy_series else None
        return d


class Stepper:
    """Precomputed symbols for one grid and time step; works on rfft2 coefficients."""

    def __init__(self, grid: Grid, dt: float, dealias: bool = True):
        self.grid, self.dt = grid, dt
        xi = grid.xi[:, None]
        k = np.arange(grid.ny // 2 + 1)[None, :].astype(float)
        with np.errstate(divide="ignore", invalid="ignore"):
            L = 1j * (xi**3 + np.where(xi != 0, k**2 / np.where(xi != 0, xi, 1.0), 0.0))
        L[0, :] = 0.0
        self.L = L
        self.ik = 1j * xi * np.ones_like(k)
        self.ik[grid.nx // 2, :] = 0.0
        if dealias:
            self.mask = ((np.abs(xi) < (2 / 3) * np.pi * grid.nx / grid.lx)
                         & (k < grid.ny / 3)).astype(float)
        else:
            self.mask = np.ones(L.shape)
        self.E = np.exp(L * dt / 2)
        self.E2 = self.E * self.E

    def forward(self, u: np.ndarray) -> np.ndarray:
        c = sfft.rfft2(u, workers=sp._workers())
        c[0, 1:] = 0.0  # xi = 0, k != 0 frozen at zero
        return c

    def backward(self, c: np.ndarray) -> np.ndarray:
        return sfft.irfft2(c, s=(self.grid.nx, self.grid.ny), workers=sp._workers())

    def nonlinear(self, c: np.ndarray) -> np.ndarray:
        u = self.backward(c * self.mask)
        w = sfft.rfft2(0.5 * u * u, workers=sp._workers())
        return -self.ik * w * self.mask

    def step(self, c: np.ndarray) -> np.ndarray:
        dt, E, E2, N = self.dt, self.E, self.E2, self.nonlinear
        k1 = N(c)
        Ec = E * c
        k2 = N(Ec + 0.5 * dt * E * k1)
        k3 = N(Ec + 0.5 * dt * k2)
        k4 = N(E2 * c + dt * E * k3)
        return E2 * c + dt / 6 * (E2 * k1 + 2 * E * (k2 + k3) + k4)


def project(grid: Grid, u: np.ndarray) -> np.ndarray:
    """Zero the (xi = 0, k != 0) coefficients; the (0, 0) mean is kept."""
    c = sp.fft(grid, u)
    c[0, 1:] = 0.0
    return sp.ifft(grid, c)


def rhs(grid: Grid, u: np.ndarray, dealias: bool = True) -> np.ndarray:
    """-u_xxx - u u_x + d_x^{-1} u_yy evaluated spectrally."""
    sp.check_mean_zero(grid, u, include_constant=False)
    st = Stepper(grid, 1.0, dealias)
    c = st.forward(u)
    return st.backward(st.L * c + st.nonlinear(c))


def cfl_report(grid: Grid, u: np.ndarray, dt: float, dealias: bool = True) -> dict:
    """Advective number dt * max|u| * xi_max and the RK4 imaginary-axis margin."""
    xi_max = np.pi * grid.nx / grid.lx * ((2 / 3) if dealias else 1.0)
    num = float(dt * np.abs(u).max() * xi_max)
    return {"dt": dt, "advective_number": num, "rk4_limit": 2 * np.sqrt(2),
            "ok": bool(num <= 1.0)}


def tail_fraction(grid: Grid, u: np.ndarray, centre: float = 0.0, frac: float = 0.1) -> float:
    """Share of the mass in the outer ``frac`` of the box, measured from ``centre``."""
    x = (grid.x - centre + grid.lx / 2) % grid.lx - grid.lx / 2
    outer = np.abs(x) >= (0.5 - frac / 2) * grid.lx
    return float(np.sum(u[outer] ** 2) / max(np.sum(u * u), 1e-300))


def step(grid: Grid, u: np.ndarray, dt: float, dealias: bool = True) -> np.ndarray:
    st = Stepper(grid, dt, dealias)
    return st.backward(st.step(st.forward(u)))


def run(grid: Grid, u0: np.ndarray, cfg: EvolutionConfig, l: float | None = None,
        snapshots: list | None = None, snapshot_every: int = 0) -> TrajectoryReport:
    """Evolve u0 and observe M, E, dist_l, tail mass (and modulation) every stride.

    ``l`` selects the orbit used for dist; ``None`` skips it.
    """
    u0 = np.asarray(u0, dtype=float)
    if not np.all(np.isfinite(u0)):
        raise ValueError("initial data not finite")
    u0 = project(grid, u0)
    st = Stepper(grid, cfg.dt, cfg.dealias)
    rep = TrajectoryReport(cfl=cfl_report(grid, u0, cfg.dt, cfg.dealias))
    profile = so.zaitsev(l, grid) if l is not None else None
    bound = BLOWUP_FACTOR * np.abs(u0).max()
    t0 = time.perf_counter()
    n_obs = 0

    def observe(t, u):
        nonlocal n_obs
        rep.times.append(float(t))
        rep.mass_series.append(fn.mass(grid, u))
        rep.energy_series.append(fn.energy(grid, u))
        centre = 0.0
        if profile is not None:
            od = fn.dist_to_orbit(grid, u, profile)
            rep.dist_series.append(od.dist)
            rep.shift_series.append(od.x0)
            centre = od.x0
        rep.tail_series.append(tail_fraction(grid, u, centre))
        if cfg.track_modulation:
            try:
                rep.modulation_series.append(md.decompose(grid, u).to_dict(grid) | {"t": t})
            except md.ConvergenceError as exc:
                rep.modulation_series.append({"t": t, "error": str(exc)})
        if snapshots is not None and snapshot_every and n_obs % snapshot_every == 0:
            snapshots.append((float(t), u.copy()))
        n_obs += 1

    c = st.forward(u0)
    observe(0.0, u0)
    for n in range(1, cfg.n_steps + 1):
        c = st.step(c)
        if n % cfg.observer_stride == 0 or n == cfg.n_steps:
            u = st.backward(c)
            mx = float(np.abs(u).max()) if np.all(np.isfinite(u)) else float("nan")
            if not np.isfinite(mx):
                raise BlowUpError(f"non-finite field at t={n * cfg.dt:.4g}", n * cfg.dt, mx)
            if mx > bound:
                raise BlowUpError(f"max|u|={mx:.3g} exceeds {bound:.3g} at t={n * cfg.dt:.4g}",
                                  n * cfg.dt, mx)
            observe(n * cfg.dt, u)
    rep.wall_time = time.perf_counter() - t0
    return rep


def evolve_field(grid: Grid, u0: np.ndarray, dt: float, n_steps: int,
                 dealias: bool = True) -> np.ndarray:
    """Plain evolution without observers (negative dt runs backwards)."""
    st = Stepper(grid, dt, dealias)
    c = st.forward(project(grid, u0))
    for _ in range(n_steps):
        c = st.step(c)
    return st.backward(c)


def reversibility_error(grid: Grid, u0: np.ndarray, dt: float, t_end: float) -> float:
    """max|u0 - back(forward(u0))| for T = t_end."""
    n = int(round(t_end / dt))
    u0 = project(grid, u0)
    fwd = evolve_field(grid, u0, dt, n)
    back = evolve_field(grid, fwd, -dt, n)
    return float(np.abs(back - u0).max())


def measured_speed(report: TrajectoryReport, lx: float) -> float:
    """Least-squares slope of the unwrapped orbit shift against time."""
    if len(report.shift_series) < 2:
        raise ValueError("need at least two observations with dist tracking")
    x = np.unwrap(np.asarray(report.shift_series) * 2 * np.pi / lx) * lx / (2 * np.pi)
    return float(np.polyfit(report.times, x, 1)[0])


def perturbation(grid: Grid, seed: int) -> np.ndarray:
    """Seeded band-limited bump with unit L2 norm and zero x-mean per line."""
    return md.band_limited_bump(grid, np.random.default_rng(seed))


@dataclass
class StabilityResult:
    a: float
    delta: float
    seed: int
    t_end: float
    max_dist: float
    initial_dist: float
    ratio: float
    report: TrajectoryReport

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in
             ("a", "delta", "seed", "t_end", "max_dist", "initial_dist", "ratio")}
        d["mass_drift"] = self.report.drift("mass_series")
        d["energy_drift"] = self.report.drift("energy_series")
        d["max_tail_fraction"] = max(self.report.tail_series)
        return d


def stability_experiment(a: float, delta: float, t_end: float = 20.0, seed: int = 0,
                         grid: Grid | None = None, dt: float = 1e-3,
                         observer_stride: int = 250) -> StabilityResult:
    """Evolve Z(a) + delta * bump and report sup_t dist_a(u(t)) / delta."""
    if not 0 <= a <= 0.3:
        raise ValueError("a must lie in [0, 0.3]")
    if delta != 0 and not 1e-4 <= delta <= 1e-2:
        raise ValueError("delta must be 0 or lie in [1e-4, 1e-2]")
    grid = grid or Grid(*STABILITY_GRID)
    u0 = so.zaitsev(a, grid) + delta * perturbation(grid, seed)
    cfg = EvolutionConfig(dt=dt, t_end=t_end, observer_stride=observer_stride)
    rep = run(grid, u0, cfg, l=a)
    md_ = rep.max_dist
    ratio = md_ / delta if delta else float("nan")
    return StabilityResult(float(a), float(delta), int(seed), float(t_end), float(md_),
                           float(rep.dist_series[0]), float(ratio), rep)


def stability_sweep(a: float, delta: float, t_end: float = 20.0, seed: int = 0,
                    grid: Grid | None = None, dt: float = 1e-3) -> dict:
    """Run at delta and delta / 2; the ratio must not grow by more than 2x."""
    r1 = stability_experiment(a, delta, t_end, seed, grid, dt)
    r2 = stability_experiment(a, delta / 2, t_end, seed, grid, dt)
    ok = r2.ratio <= 2 * r1.ratio
    return {"runs": [r1.to_dict(), r2.to_dict()], "ratio_growth": r2.ratio / r1.ratio,
            "pass": bool(ok)}
