"""Field dumps: CSV ``x,y,value`` (y outer, x inner) and a raw little-endian binary.

The binary layout is three float64 header values ``nx, lx, ny`` followed by the
nx * ny samples in the same y-outer order as the CSV.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .spectral import Grid

_LE = "<f8"


def save_csv(path, grid: Grid, f: np.ndarray) -> None:
    if f.shape != (grid.nx, grid.ny):
        raise ValueError(f"field shape {f.shape} does not match grid ({grid.nx}, {grid.ny})")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "value"])
        for m, y in enumerate(grid.y):
            for j, x in enumerate(grid.x):
                w.writerow([repr(float(x)), repr(float(y)), repr(float(f[j, m]))])


def load_csv(path, lx: float | None = None) -> tuple[Grid, np.ndarray]:
    """Read a CSV dump back; lx is inferred from the first node (x_0 = -lx/2) unless given."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != 3:
        raise ValueError("expected three columns x,y,value")
    xs = np.unique(data[:, 0])
    ys = np.unique(data[:, 1])
    nx, ny = len(xs), len(ys)
    if nx * ny != len(data):
        raise ValueError("CSV rows do not form a full tensor grid")
    if lx is None:
        lx = -2.0 * float(xs[0])
    grid = Grid(nx, float(lx), ny)
    f = data[:, 2].reshape(ny, nx).T.copy()
    return grid, f


def save_binary(path, grid: Grid, f: np.ndarray) -> None:
    if f.shape != (grid.nx, grid.ny):
        raise ValueError(f"field shape {f.shape} does not match grid ({grid.nx}, {grid.ny})")
    head = np.array([grid.nx, grid.lx, grid.ny], dtype=_LE)
    body = np.ascontiguousarray(f.T, dtype=_LE)
    Path(path).write_bytes(head.tobytes() + body.tobytes())


def load_binary(path) -> tuple[Grid, np.ndarray]:
    raw = np.frombuffer(Path(path).read_bytes(), dtype=_LE)
    if raw.size < 3:
        raise ValueError("truncated binary dump")
    nx, lx, ny = raw[:3]
    if nx != int(nx) or ny != int(ny):
        raise ValueError("corrupt header")
    grid = Grid(int(nx), float(lx), int(ny))
    if raw.size != 3 + grid.nx * grid.ny:
        raise ValueError(f"expected {grid.nx * grid.ny} samples, found {raw.size - 3}")
    return grid, raw[3:].reshape(grid.ny, grid.nx).T.copy()


def load_field(path, lx: float | None = None) -> tuple[Grid, np.ndarray]:
    """Dispatch on extension: ``.csv`` or anything else as binary."""
    if str(path).lower().endswith(".csv"):
        return load_csv(path, lx)
    return load_binary(path)


def save_field(path, grid: Grid, f: np.ndarray) -> None:
    if str(path).lower().endswith(".csv"):
        save_csv(path, grid, f)
    else:
        save_binary(path, grid, f)
