"""Backward Euler solver for the coupled 1D displacement/temperature system.

The semi-discrete model is the P1 Galerkin form of

    rho u_tt - (lambda + 2 mu) u_xx + gamma theta_x = p
    rho C_s theta_t - kappa theta_xx - (k * theta_xx) + gamma T0 u_tx = h

on (0, 1) x (0, T] with homogeneous Dirichlet conditions. Each time step
solves one sparse system in the interior unknowns, ordered
``u_1, theta_1, u_2, theta_2, ...``; the matrix is factored once per solver.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid import SpaceGrid, TimeGrid
from .kernel import Kernel

__all__ = [
    "MaterialParams",
    "InitialData",
    "Separable",
    "ProblemSpec",
    "ForwardSolution",
    "StepSolver",
    "assemble_step_system",
    "sample_source",
    "solve_forward",
    "solve_sensitivity",
    "save_trajectory_csv",
]

Source = Union[None, Callable, np.ndarray, "Separable"]


@dataclass(frozen=True)
class MaterialParams:
    """Nondimensional material constants; defaults are the benchmark values."""

    rho: float = 1.0
    C_s: float = 1.0
    kappa: float = 1.0
    lam: float = 1.0
    mu: float = 0.0
    gamma: float = 1.0
    T0: float = 0.0189

    def __post_init__(self):
        for name in ("rho", "C_s", "kappa", "lam"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")
        for name in ("mu", "gamma", "T0"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be nonnegative, got {getattr(self, name)!r}")

    @property
    def wave_modulus(self) -> float:
        return self.lam + 2.0 * self.mu


@dataclass(frozen=True)
class Separable:
    """Source of the form ``g(t) f(x) + rest(x, t)``."""

    g: Callable
    f: np.ndarray
    rest: Source = None


@dataclass
class InitialData:
    u0: np.ndarray
    u1: np.ndarray
    theta0: np.ndarray

    @classmethod
    def zeros(cls, grid: SpaceGrid) -> "InitialData":
        z = np.zeros(grid.n_nodes)
        return cls(z, z.copy(), z.copy())


@dataclass
class ProblemSpec:
    """Everything needed for one direct solve.

    Sources ``p`` and ``h`` may be None (zero), a vectorised callable
    ``(x, t) -> value``, an array of shape ``(n_t + 1, n_x + 1)`` holding the
    values at every node and time level, or a :class:`Separable`.
    """

    space: SpaceGrid
    time: TimeGrid
    params: MaterialParams = field(default_factory=MaterialParams)
    kernel: Kernel = field(default_factory=Kernel)
    p: Source = None
    h: Source = None
    initial: Optional[InitialData] = None

    def with_sources(self, p: Source = None, h: Source = None, initial=None) -> "ProblemSpec":
        return ProblemSpec(self.space, self.time, self.params, self.kernel, p, h, initial)


@dataclass
class ForwardSolution:
    """Nodal trajectories, each of shape ``(n_t + 1, n_x + 1)``."""

    u: np.ndarray
    theta: np.ndarray
    du: np.ndarray
    space: SpaceGrid
    time: TimeGrid

    def __add__(self, other: "ForwardSolution") -> "ForwardSolution":
        return ForwardSolution(self.u + other.u, self.theta + other.theta,
                               self.du + other.du, self.space, self.time)


def sample_source(src: Source, space: SpaceGrid, time: TimeGrid) -> Optional[np.ndarray]:
    """Evaluate a source on every (time level, node) pair; None stays None."""
    if src is None:
        return None
    shape = (time.n_t + 1, space.n_nodes)
    if isinstance(src, Separable):
        gt = np.asarray(src.g(time.times), dtype=float) * np.ones(time.n_t + 1)
        vals = gt[:, None] * space.check(src.f)[None, :]
        rest = sample_source(src.rest, space, time)
        if rest is not None:
            vals = vals + rest
    elif callable(src):
        vals = np.asarray(src(space.nodes[None, :], time.times[:, None]), dtype=float)
        vals = np.broadcast_to(vals, shape).copy()
    else:
        vals = np.asarray(src, dtype=float)
        if vals.shape != shape:
            raise ValueError(f"source array has shape {vals.shape}, expected {shape}")
    if not np.all(np.isfinite(vals)):
        raise ValueError("source has non-finite values")
    return vals


def _interior(mat: sp.spmatrix) -> sp.csr_matrix:
    return sp.csr_matrix(mat[1:-1, 1:-1])


def _interleave(uu, ut, tu, tt) -> sp.csc_matrix:
    """Merge four n x n blocks into one 2n x 2n matrix with u/theta interleaved."""
    e = [[1, 0], [0, 0]], [[0, 1], [0, 0]], [[0, 0], [1, 0]], [[0, 0], [0, 1]]
    parts = [sp.kron(b, sp.csr_matrix(np.array(pat, dtype=float)))
             for b, pat in zip((uu, ut, tu, tt), e)]
    return sp.csc_matrix(sum(parts[1:], parts[0]))


def assemble_step_system(params: MaterialParams, grid: SpaceGrid, tau: float,
                         kernel: Kernel) -> sp.csc_matrix:
    """Time-independent step matrix of the forward scheme on interior nodes.

    Rows and columns alternate ``u`` and ``theta`` values node by node.
    """
    M = _interior(grid.mass)
    S = _interior(grid.stiffness)
    G = _interior(grid.gradient_coupling)
    k0 = float(kernel(0.0))
    uu = params.rho * M + tau**2 * params.mu * S + tau**2 * (params.lam + params.mu) * S
    ut = tau**2 * params.gamma * G
    tu = -params.T0 * params.gamma * G.T
    tt = params.rho * params.C_s * M + tau * params.kappa * S + tau**2 * k0 * S
    return _interleave(uu, ut, tu, tt)


def _factor(mat: sp.csc_matrix):
    try:
        lu = spla.splu(mat)
    except RuntimeError as exc:
        raise np.linalg.LinAlgError(f"step matrix is singular: {exc}") from exc
    return lu


class StepSolver:
    """Forward time stepper with a prefactored step matrix.

    Holds only immutable data after construction, so one instance may be
    reused for any number of solves on the same grids and parameters.
    """

    def __init__(self, params: MaterialParams, kernel: Kernel, space: SpaceGrid,
                 time: TimeGrid):
        self.params, self.kernel, self.space, self.time = params, kernel, space, time
        tau = time.tau
        self.matrix = assemble_step_system(params, space, tau, kernel)
        self._lu = _factor(self.matrix)
        self.M_rows = sp.csr_matrix(space.mass[1:-1, :])
        self.M = _interior(space.mass)
        self.S = _interior(space.stiffness)
        self.G = _interior(space.gradient_coupling)
        self.lags = kernel.lags(time.n_t, tau)

    def solve(self, p=None, h=None, initial: Optional[InitialData] = None,
              verify: bool = False) -> ForwardSolution:
        """Step through all time levels; ``p`` and ``h`` are sampled arrays or None."""
        prm, space, time = self.params, self.space, self.time
        n_t, tau = time.n_t, time.tau
        n_in = space.n_x - 1
        u = np.zeros((n_t + 1, space.n_nodes))
        th = np.zeros_like(u)
        du = np.zeros_like(u)
        if initial is not None:
            for name in ("u0", "u1", "theta0"):
                vals = space.check(getattr(initial, name))
                if abs(vals[0]) > 1e-12 or abs(vals[-1]) > 1e-12:
                    raise ValueError(f"initial field {name} must vanish at the boundary")
            u[0, 1:-1] = initial.u0[1:-1]
            du[0, 1:-1] = initial.u1[1:-1]
            th[0, 1:-1] = initial.theta0[1:-1]
        p_load = None if p is None else (self.M_rows @ np.asarray(p).T).T
        h_load = None if h is None else (self.M_rows @ np.asarray(h).T).T

        M, S, G = self.M, self.S, self.G
        rhs = np.empty(2 * n_in)
        S_theta = np.zeros((n_t + 1, n_in))
        for i in range(1, n_t + 1):
            u_prev, th_prev = u[i - 1, 1:-1], th[i - 1, 1:-1]
            ru = prm.rho * (M @ (u_prev + tau * du[i - 1, 1:-1]))
            rt = prm.rho * prm.C_s * (M @ th_prev) - prm.T0 * prm.gamma * (G.T @ u_prev)
            if p_load is not None:
                ru += tau**2 * p_load[i]
            if h_load is not None:
                rt += tau * h_load[i]
            if i > 1:
                # lagged memory terms j = 1 .. i-1
                w = self.lags[i - 1:0:-1] * tau
                rt -= tau * (w @ S_theta[1:i])
            rhs[0::2], rhs[1::2] = ru, rt
            sol = self._lu.solve(rhs)
            if verify:
                _check_residual(self.matrix, sol, rhs)
            u[i, 1:-1], th[i, 1:-1] = sol[0::2], sol[1::2]
            du[i] = (u[i] - u[i - 1]) / tau
            S_theta[i] = S @ th[i, 1:-1]
        return ForwardSolution(u, th, du, space, time)


def _check_residual(mat, sol, rhs, tol: float = 1e-10):
    res = np.linalg.norm(mat @ sol - rhs)
    scale = max(np.linalg.norm(rhs), np.finfo(float).tiny)
    if res > tol * scale:
        raise np.linalg.LinAlgError(f"step solve residual {res / scale:.3e} exceeds {tol}")


@lru_cache(maxsize=32)
def _solver(params, kernel, space, time) -> StepSolver:
    return StepSolver(params, kernel, space, time)


def solve_forward(spec: ProblemSpec, verify: bool = False) -> ForwardSolution:
    solver = _solver(spec.params, spec.kernel, spec.space, spec.time)
    p = sample_source(spec.p, spec.space, spec.time)
    h = sample_source(spec.h, spec.space, spec.time)
    return solver.solve(p, h, spec.initial, verify=verify)


def solve_sensitivity(direction, g: Callable, spec: ProblemSpec, into: str = "p",
                      verify: bool = False) -> ForwardSolution:
    """Source-only solve with ``g(t) * direction`` placed in ``p`` or ``h``.

    Initial data and other sources of ``spec`` are ignored.
    """
    if into not in ("p", "h"):
        raise ValueError(f"sensitivity source goes into 'p' or 'h', got {into!r}")
    src = Separable(g, spec.space.check(direction))
    sub = spec.with_sources(**{into: src})
    return solve_forward(sub, verify=verify)


def save_trajectory_csv(path, sol: ForwardSolution) -> Path:
    """Long-format export with columns ``t, x, u, theta``."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "x", "u", "theta"])
        for j, t in enumerate(sol.time.times):
            for i, x in enumerate(sol.space.nodes):
                writer.writerow([repr(float(t)), repr(float(x)),
                                 repr(float(sol.u[j, i])), repr(float(sol.theta[j, i]))])
    return path
