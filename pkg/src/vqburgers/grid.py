"""Uniform periodic 1D grids, fields on them, and the analytic viscous hump."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Grid",
    "GridFunction",
    "make_uniform_grid",
    "analytic_hump",
    "qubits_required",
    "l2_distance",
    "write_field_csv",
    "read_field_csv",
    "write_field_manifest",
]


@dataclass(frozen=True, eq=False)
class Grid:
    """Periodic mesh of 2^N equidistant points on [0, L)."""

    length: float
    n_qubits: int

    @property
    def n_points(self) -> int:
        return 2**self.n_qubits

    @property
    def spacing(self) -> float:
        return self.length / self.n_points

    @property
    def points(self) -> np.ndarray:
        return self.spacing * np.arange(self.n_points)

    def wrap(self, dx: np.ndarray | float) -> np.ndarray | float:
        """Map a coordinate difference to its nearest periodic image in [-L/2, L/2)."""
        return (dx + 0.5 * self.length) % self.length - 0.5 * self.length


@dataclass(eq=False)
class GridFunction:
    """Real field samples, one value per grid point."""

    grid: Grid
    values: np.ndarray
    tag: str = ""

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_points,):
            raise ValueError(
                f"expected {self.grid.n_points} values, got shape {self.values.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")

    def copy(self, values: np.ndarray | None = None, tag: str | None = None) -> "GridFunction":
        return GridFunction(
            self.grid,
            self.values.copy() if values is None else values,
            self.tag if tag is None else tag,
        )

    def norm(self) -> float:
        """Euclidean norm of the raw value vector (amplitude-space norm)."""
        return float(np.linalg.norm(self.values))


def make_uniform_grid(length: float, n_qubits: int) -> Grid:
    """Build a periodic grid of 2^N points with spacing L / 2^N."""
    if n_qubits < 1:
        raise ValueError("n_qubits must be >= 1")
    if length <= 0:
        raise ValueError("length must be positive")
    return Grid(length=float(length), n_qubits=int(n_qubits))


def analytic_hump(Z: float, x0: float, nu: float, t: float, grid: Grid) -> GridFunction:
    """Viscous hump solution sampled on the grid.

    f(x, t) = Z / (2 sqrt(pi nu t)) * exp(-(x - x0)^2 / (4 nu t)), with x - x0
    wrapped to the nearest periodic image so the profile is comparable to a
    periodic solver.
    """
    if nu <= 0:
        raise ValueError("viscosity must be positive")
    if t <= 0:
        raise ValueError("time must be positive")
    d = grid.wrap(grid.points - x0)
    values = Z / (2.0 * math.sqrt(math.pi * nu * t)) * np.exp(-(d**2) / (4.0 * nu * t))
    return GridFunction(grid, values, tag="velocity")


def qubits_required(Re: float, K: int) -> int:
    """Qubits needed to hold a scalar field resolving all scales at Reynolds number Re.

    ceil((3K/4) * log2(Re)) for K spatial dimensions.
    """
    if Re <= 1:
        raise ValueError("Reynolds number must exceed 1")
    if K not in (1, 2, 3):
        raise ValueError("K must be 1, 2 or 3")
    v = 0.75 * K * math.log2(Re)
    # guard against ties landing epsilon above an exact integer
    return math.ceil(v - 1e-9)


def l2_distance(a: GridFunction | np.ndarray, b: GridFunction | np.ndarray, h: float | None = None) -> float:
    """Grid-weighted L2 distance sqrt(h * sum (a-b)^2), the continuum norm."""
    if isinstance(a, GridFunction):
        h = a.grid.spacing if h is None else h
        a = a.values
    if isinstance(b, GridFunction):
        b = b.values
    if h is None:
        raise ValueError("spacing h required for raw arrays")
    return float(np.sqrt(h * np.sum((np.asarray(a) - np.asarray(b)) ** 2)))


def write_field_csv(f: GridFunction, path: str) -> None:
    """Write one row per point with header x,f at full double precision."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "f"])
        for x, v in zip(f.grid.points, f.values):
            w.writerow([repr(float(x)), repr(float(v))])


def read_field_csv(path: str, length: float | None = None) -> GridFunction:
    """Read an x,f CSV back into a GridFunction (point count must be a power of two)."""
    xs: list[float] = []
    vs: list[float] = []
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if [c.strip() for c in header[:2]] != ["x", "f"]:
            raise ValueError(f"expected header x,f in {path}")
        for row in r:
            if not row:
                continue
            xs.append(float(row[0]))
            vs.append(float(row[1]))
    n = len(vs)
    if n < 2 or n & (n - 1):
        raise ValueError(f"point count {n} is not a power of two")
    h = xs[1] - xs[0]
    grid = make_uniform_grid(length if length is not None else h * n, n.bit_length() - 1)
    return GridFunction(grid, np.array(vs))


def write_field_manifest(f: GridFunction, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(
            {
                "length": f.grid.length,
                "n_qubits": f.grid.n_qubits,
                "spacing": f.grid.spacing,
                "tag": f.tag,
            },
            fh,
            indent=2,
        )
        fh.write("\n")
