"""Uniform 1D meshes, time grids and the quadratures used throughout.

Fields are plain numpy vectors of nodal values (length ``n_x + 1``) and
trajectories are arrays of shape ``(n_t + 1, n_x + 1)``; the grids carry the
P1 finite element matrices needed to integrate them.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.sparse as sp

__all__ = [
    "SpaceGrid",
    "TimeGrid",
    "inner_l2",
    "norm_l2",
    "simpson_weights",
    "simpson_time_integral",
    "project_fine_to_working",
    "save_field_csv",
    "load_field_csv",
]


@dataclass(frozen=True)
class SpaceGrid:
    """Equidistant subdivision of the unit interval into ``n_x`` elements."""

    n_x: int

    def __post_init__(self):
        if int(self.n_x) != self.n_x or self.n_x < 1:
            raise ValueError(f"n_x must be a positive integer, got {self.n_x!r}")

    @property
    def h(self) -> float:
        return 1.0 / self.n_x

    @cached_property
    def nodes(self) -> np.ndarray:
        x = np.arange(self.n_x + 1) * self.h
        x[-1] = 1.0
        x.setflags(write=False)
        return x

    @property
    def n_nodes(self) -> int:
        return self.n_x + 1

    @cached_property
    def mass(self) -> sp.csr_matrix:
        """Consistent P1 mass matrix on all nodes."""
        h = self.h
        n = self.n_nodes
        diag = np.full(n, 2.0 * h / 3.0)
        diag[[0, -1]] = h / 3.0
        off = np.full(n - 1, h / 6.0)
        return sp.diags([off, diag, off], [-1, 0, 1], format="csr")

    @cached_property
    def stiffness(self) -> sp.csr_matrix:
        """P1 stiffness matrix ``(phi_b', phi_a')`` on all nodes."""
        h = self.h
        n = self.n_nodes
        diag = np.full(n, 2.0 / h)
        diag[[0, -1]] = 1.0 / h
        off = np.full(n - 1, -1.0 / h)
        return sp.diags([off, diag, off], [-1, 0, 1], format="csr")

    @cached_property
    def gradient_coupling(self) -> sp.csr_matrix:
        """Matrix ``G[a, b] = (phi_b', phi_a)`` on all nodes."""
        n = self.n_nodes
        diag = np.zeros(n)
        diag[0], diag[-1] = -0.5, 0.5
        return sp.diags([np.full(n - 1, -0.5), diag, np.full(n - 1, 0.5)], [-1, 0, 1], format="csr")

    def sample(self, func) -> np.ndarray:
        return np.asarray(func(self.nodes), dtype=float) * np.ones(self.n_nodes)

    def check(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if values.shape[-1] != self.n_nodes:
            raise ValueError(
                f"field has {values.shape[-1]} nodal values, grid with n_x={self.n_x} "
                f"needs {self.n_nodes}")
        return values


@dataclass(frozen=True)
class TimeGrid:
    """Uniform partition of ``[0, T]`` into an even number of steps."""

    n_t: int
    T: float = 1.0

    def __post_init__(self):
        if int(self.n_t) != self.n_t or self.n_t < 2 or self.n_t % 2:
            raise ValueError(f"n_t must be a positive even integer, got {self.n_t!r}")
        if not self.T > 0:
            raise ValueError(f"final time must be positive, got {self.T!r}")

    @property
    def tau(self) -> float:
        return self.T / self.n_t

    @cached_property
    def times(self) -> np.ndarray:
        t = np.arange(self.n_t + 1) * self.tau
        t[-1] = self.T
        t.setflags(write=False)
        return t

    @cached_property
    def simpson(self) -> np.ndarray:
        return simpson_weights(self.n_t, self.tau)


def inner_l2(a, b, grid: SpaceGrid) -> float:
    """L2 inner product of two P1 fields, exact for the interpolants."""
    a = grid.check(a)
    b = grid.check(b)
    return float(a @ (grid.mass @ b))


def norm_l2(a, grid: SpaceGrid) -> float:
    return float(np.sqrt(max(inner_l2(a, a, grid), 0.0)))


def simpson_weights(n_t: int, tau: float) -> np.ndarray:
    """Composite Simpson 1/3 weights ``(tau/3) * (1, 4, 2, ..., 4, 1)``."""
    if n_t < 2 or n_t % 2:
        raise ValueError(f"composite Simpson rule needs an even number of steps, got {n_t}")
    w = np.ones(n_t + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * (tau / 3.0)


def simpson_time_integral(traj: np.ndarray, tau: float) -> np.ndarray:
    """Integrate a trajectory over time, node by node."""
    traj = np.asarray(traj, dtype=float)
    return simpson_weights(traj.shape[0] - 1, tau) @ traj


def project_fine_to_working(fine: np.ndarray, working: SpaceGrid) -> np.ndarray:
    """Restrict nodal values from a finer uniform grid onto ``working``.

    The fine grid must be a refinement of the working grid so that every
    working node is also a fine node.
    """
    fine = np.asarray(fine, dtype=float)
    n_fine = fine.shape[-1] - 1
    if n_fine < working.n_x or n_fine % working.n_x:
        raise ValueError(
            f"fine grid with n_x={n_fine} does not refine working grid with n_x={working.n_x}")
    stride = n_fine // working.n_x
    return fine[..., ::stride].copy()


def save_field_csv(path, grid: SpaceGrid, values, name: str = "value") -> Path:
    path = Path(path)
    values = grid.check(values)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", name])
        for x, v in zip(grid.nodes, values):
            writer.writerow([repr(float(x)), repr(float(v))])
    return path


def load_field_csv(path) -> tuple[SpaceGrid, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    grid = SpaceGrid(data.shape[0] - 1)
    if not np.allclose(data[:, 0], grid.nodes, rtol=0, atol=1e-12):
        raise ValueError(f"{path}: nodes are not a uniform grid on [0, 1]")
    return grid, data[:, 1].copy()
