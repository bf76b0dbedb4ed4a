"""Independent classical ground truth for the Burgers pipeline.

Finite-difference stepping with explicit index arithmetic (rolls of the value
array), deliberately sharing no code with the operator module it is used to
verify.  The dense circulant matrices are kept for cross checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import Grid, GridFunction

__all__ = ["DenseStepper", "fd_burgers_step", "dense_residual", "fd_trajectory"]


def _circulant_nabla(n: int, h: float) -> np.ndarray:
    m = np.zeros((n, n))
    for k in range(n):
        m[k, (k + 1) % n] = 1.0 / (2.0 * h)
        m[k, (k - 1) % n] = -1.0 / (2.0 * h)
    return m


def _circulant_laplacian(n: int, h: float) -> np.ndarray:
    m = np.zeros((n, n))
    for k in range(n):
        m[k, (k + 1) % n] += 1.0 / h**2
        m[k, k] += -2.0 / h**2
        m[k, (k - 1) % n] += 1.0 / h**2
    return m


@dataclass(eq=False)
class DenseStepper:
    """Grid, physics constants, and precomputed circulant stencil matrices."""

    grid: Grid
    nu: float
    tau: float
    nonlinear: bool = True
    nabla_matrix: np.ndarray = field(init=False)
    laplacian_matrix: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        n = self.grid.n_points
        h = self.grid.spacing
        self.nabla_matrix = _circulant_nabla(n, h)
        self.laplacian_matrix = _circulant_laplacian(n, h)


def fd_burgers_step(f: GridFunction, stepper: DenseStepper) -> GridFunction:
    """One explicit Euler step: f' = f + tau (nu lap(f) - f * grad(f)), periodic."""
    if f.grid.n_points != stepper.grid.n_points:
        raise ValueError("field and stepper grids differ")
    v = f.values
    h = stepper.grid.spacing
    lap = (np.roll(v, -1) - 2.0 * v + np.roll(v, 1)) / h**2
    rhs = stepper.nu * lap
    if stepper.nonlinear:
        grad = (np.roll(v, -1) - np.roll(v, 1)) / (2.0 * h)
        rhs = rhs - v * grad
    return GridFunction(f.grid, v + stepper.tau * rhs, tag=f.tag)


def dense_residual(candidate: GridFunction, prev: GridFunction, stepper: DenseStepper) -> float:
    """|| candidate - euler_step(prev) ||^2, the classical mirror of the cost."""
    if candidate.grid.n_points != prev.grid.n_points:
        raise ValueError("grids differ")
    step = fd_burgers_step(prev, stepper)
    return float(np.sum((candidate.values - step.values) ** 2))


def fd_trajectory(initial: GridFunction, stepper: DenseStepper, n_steps: int) -> list[GridFunction]:
    """The full classical trajectory, initial frame included."""
    frames = [initial.copy()]
    for _ in range(n_steps):
        frames.append(fd_burgers_step(frames[-1], stepper))
    return frames
