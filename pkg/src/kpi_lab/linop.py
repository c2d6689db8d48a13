"""Per-transverse-mode linearisations about the line soliton and their spectra.

Operators are dense matrices acting on samples of an x-profile. Quadratic forms
use the discrete inner product ``<f, g> = dx * sum(f * g)``, and each operator is
compressed onto an orthonormal real Fourier basis of the subspace it lives on
(mean-zero for the nonlocal modes, additionally Nyquist-free for the
fourth-order operator whose derivative factors annihilate that mode).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from numpy.polynomial import Polynomial

from . import solitons as so
from . import spectral as sp
from .spectral import Grid

NEG_TOL = 1e-8
ZERO_BAND = 1e-4


class EigenError(RuntimeError):
    pass


@dataclass
class OperatorMatrix:
    n: int
    c: float
    entries: np.ndarray  # compressed, in basis coordinates
    basis: np.ndarray  # nx x size, orthonormal in the dx-weighted inner product
    grid: Grid
    kind: str = "L"
    description: str = ""

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def apply(self, profile: np.ndarray) -> np.ndarray:
        """Operator applied to a profile (projected onto the basis first)."""
        coords = self.basis.T @ profile * self.grid.dx
        return self.basis @ (self.entries @ coords)

    def asymmetry(self) -> float:
        return float(np.abs(self.entries - self.entries.T).max())


@dataclass
class SpectrumReport:
    eigenvalues: list[float]
    eigenvectors: np.ndarray  # columns are profiles
    negative_count: int
    near_zero: list[tuple[float, float]] = field(default_factory=list)
    continuum_edge: float | None = None

    def to_dict(self) -> dict:
        d = {
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "negative_count": int(self.negative_count),
            "near_zero": [[float(a), float(b)] for a, b in self.near_zero],
        }
        if self.continuum_edge is not None:
            d["continuum_edge"] = self.continuum_edge
            d["continuum_approximants"] = [float(v) for v in self.eigenvalues
                                           if v >= self.continuum_edge - 0.05]
        return d


def fourier_basis(grid: Grid, mean: bool, nyquist: bool) -> np.ndarray:
    """Orthonormal (dx-weighted) real Fourier basis of the chosen subspace."""
    x = grid.x - grid.x[0]
    L = grid.lx
    cols = []
    if mean:
        cols.append(np.ones(grid.nx) / np.sqrt(L))
    for p in range(1, grid.nx // 2):
        w = 2 * np.pi * p / L
        cols.append(np.cos(w * x) * np.sqrt(2 / L))
        cols.append(np.sin(w * x) * np.sqrt(2 / L))
    if nyquist:
        cols.append(np.cos(np.pi * grid.nx / L * x) / np.sqrt(L))
    return np.stack(cols, axis=1)


def _symbol_matrix(grid: Grid, symbol: np.ndarray) -> np.ndarray:
    """Physical-space matrix of a real even Fourier multiplier."""
    eye = np.eye(grid.nx)
    return np.real(np.fft.ifft(symbol[:, None] * np.fft.fft(eye, axis=0), axis=0))


def _deriv_matrix(grid: Grid) -> np.ndarray:
    sym = 1j * grid.xi
    sym[grid.nx // 2] = 0.0
    eye = np.eye(grid.nx)
    return np.real(np.fft.ifft(sym[:, None] * np.fft.fft(eye, axis=0), axis=0))


def _L_physical(n: int, c: float, grid: Grid) -> np.ndarray:
    xi2 = grid.xi**2
    sym = xi2.copy()
    if n:
        inv = np.zeros_like(xi2)
        inv[1:] = 1.0 / xi2[1:]
        sym = sym + n * n * inv
    Q = so.line_soliton_profile(c, grid)
    return _symbol_matrix(grid, sym) + np.diag(c - Q)


def _compress(mat: np.ndarray, basis: np.ndarray, grid: Grid) -> np.ndarray:
    m = grid.dx * basis.T @ mat @ basis
    return 0.5 * (m + m.T)


def build_L(n: int, c: float, grid: Grid) -> OperatorMatrix:
    """-d_xx - n^2 d_x^{-2} + c - Q_c for transverse mode n."""
    if n < 0:
        raise ValueError("n must be >= 0 (operators depend on n^2)")
    if not c > 0:
        raise ValueError("c must be positive")
    basis = fourier_basis(grid, mean=(n == 0), nyquist=True)
    ent = _compress(_L_physical(n, c, grid), basis, grid)
    desc = "full space" if n == 0 else "zero x-mean subspace"
    return OperatorMatrix(n, c, ent, basis, grid, "L", desc)


def build_fourth_order(c: float, grid: Grid, n: int = 1) -> OperatorMatrix:
    """-D L_n D on the mean-zero, Nyquist-free subspace."""
    if not c > 0:
        raise ValueError("c must be positive")
    D = _deriv_matrix(grid)
    mat = -D @ _L_physical(n, c, grid) @ D
    basis = fourier_basis(grid, mean=False, nyquist=False)
    ent = _compress(mat, basis, grid)
    return OperatorMatrix(n, c, ent, basis, grid, "fourth_order",
                          "zero x-mean, Nyquist-free subspace")


def spectrum(m: OperatorMatrix, count: int = 6, kernel: list[np.ndarray] | None = None
             ) -> SpectrumReport:
    """The ``count`` smallest eigenpairs by a dense symmetric solve."""
    count = max(1, min(count, m.size))
    try:
        vals, vecs = sla.eigh(m.entries)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigenError(f"eigensolver failed: {exc}") from exc
    norm = float(np.abs(vals).max())
    neg = int(np.sum(vals < -NEG_TOL * norm))
    profiles = m.basis @ vecs[:, :count]
    near = []
    for j in range(count):
        if abs(vals[j]) < ZERO_BAND:
            ov = max((overlap(m.grid, profiles[:, j], kv) for kv in kernel), default=float("nan")) \
                if kernel else float("nan")
            near.append((float(vals[j]), ov))
    edge = float(m.n**2) if m.kind == "fourth_order" else None
    return SpectrumReport([float(v) for v in vals[:count]], profiles, neg, near, edge)


def overlap(grid: Grid, u: np.ndarray, v: np.ndarray) -> float:
    """|<u, v>| / (|u| |v|), in [0, 1]."""
    den = np.sqrt(sp.inner(grid, u, u) * sp.inner(grid, v, v))
    return float(min(abs(sp.inner(grid, u, v)) / den, 1.0)) if den > 0 else 0.0


def z1_mode_weight(grid: Grid, n: int) -> np.ndarray:
    """(1 + |xi| + |n / xi|)^2 per x-wavenumber; weight 1 on xi = 0."""
    xi = np.abs(grid.xi)
    w = np.ones_like(xi)
    w[1:] = 1 + xi[1:] + abs(n) / xi[1:]
    return w**2


def coercivity_constant(op: OperatorMatrix, constraints: list[np.ndarray] | None = None) -> float:
    """min <L w, w> / ||w||^2_{Z1, mode n} over w orthogonal to the constraints."""
    grid = op.grid
    B = op.basis
    if constraints:
        C = np.stack(constraints, axis=1)
        coords = grid.dx * B.T @ C
        if np.linalg.matrix_rank(coords, tol=1e-10 * np.abs(coords).max()) < C.shape[1]:
            raise ValueError("degenerate constraint set")
        N = sla.null_space(coords.T)
    else:
        N = np.eye(op.size)
    A = N.T @ op.entries @ N
    W = _compress(_symbol_matrix(grid, z1_mode_weight(grid, op.n)), B, grid)
    Wn = N.T @ W @ N
    vals = sla.eigh(0.5 * (A + A.T), 0.5 * (Wn + Wn.T), eigvals_only=True,
                    subset_by_index=[0, 0])
    return float(vals[0])


def coercivity_vs_speed(c_values, grid: Grid) -> list[dict]:
    """Smallest eigenvalue of L_1(c) for each speed."""
    rows = []
    for c in c_values:
        if not 0 < c < 4:
            raise ValueError("speeds must lie in (0, 4)")
        lam = spectrum(build_L(1, c, grid), 1).eigenvalues[0]
        rows.append({"c": float(c), "smallest_eigenvalue": float(lam)})
    return rows


# -- local form of the fourth-order operator on non-decaying profiles -----------


class ExpTanh:
    """Functions exp(m x) * P(tanh(s x)) closed under differentiation and products."""

    def __init__(self, m: float, poly: Polynomial, s: float = so.S4):
        self.m, self.poly, self.s = m, poly, s

    def dx(self) -> "ExpTanh":
        dP = self.poly.deriv()
        sech2 = Polynomial([1.0, 0.0, -1.0])
        return ExpTanh(self.m, self.m * self.poly + self.s * sech2 * dP, self.s)

    def times_poly(self, p: Polynomial) -> "ExpTanh":
        return ExpTanh(self.m, self.poly * p, self.s)

    def __add__(self, other: "ExpTanh") -> "ExpTanh":
        assert self.m == other.m and self.s == other.s
        return ExpTanh(self.m, self.poly + other.poly, self.s)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.exp(self.m * x) * self.poly(np.tanh(self.s * x))


def g_mu_exptanh(mu: float) -> ExpTanh:
    return ExpTanh(so.S4 * mu, Polynomial([mu**3 + 2 * mu, -3 * mu**2]))


def fourth_order_local_terms(u: ExpTanh, c: float = so.C_CRIT) -> list[ExpTanh]:
    """Terms of u'''' + u - ((c - Q_c) u')' with Q_c = 3c (1 - tanh^2(s x)).

    Only valid when ``u.s`` equals sqrt(c)/2, the soliton's own scale.
    """
    if not np.isclose(u.s, np.sqrt(c) / 2):
        raise ValueError("profile scale must match the soliton scale sqrt(c)/2")
    u4 = u.dx().dx().dx().dx()
    c_minus_q = Polynomial([c - 3 * c, 0.0, 3 * c])
    flux = u.dx().times_poly(c_minus_q).dx()
    return [u4, u, flux.times_poly(Polynomial([-1.0]))]


def local_relative_residual(terms: list[ExpTanh], x: np.ndarray) -> float:
    vals = [t(x) for t in terms]
    res = np.abs(sum(vals)).max()
    scale = max(np.abs(v).max() for v in vals)
    return float(res / scale)


def kernel_residual_growing(mu: float, half_width: float = 5.0, npts: int = 2001) -> float:
    """Relative residual of -D L_1 D on d/dx g_mu over |x| <= half_width."""
    x = np.linspace(-half_width, half_width, npts)
    return local_relative_residual(fourth_order_local_terms(g_mu_exptanh(mu).dx()), x)


def kernel_residual_degenerate(half_width: float = 5.0, h: float = 1e-4, npts: int = 2001) -> float:
    """Same check for lim (d/dx)(g_mu + g_-mu)/(mu - 1), by central mu-differencing."""
    x = np.linspace(-half_width, half_width, npts)

    def term_values(m):
        per_sign = [fourth_order_local_terms(g_mu_exptanh(sg * m).dx()) for sg in (1, -1)]
        return [a(x) + b(x) for a, b in zip(*per_sign)]

    hi, lo = term_values(1 + h), term_values(1 - h)
    terms = [(p - q) / (2 * h) for p, q in zip(hi, lo)]
    return float(np.abs(sum(terms)).max() / max(np.abs(t).max() for t in terms))
