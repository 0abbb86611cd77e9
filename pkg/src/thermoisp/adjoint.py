"""Backward-in-time solver for the adjoint thermoelastic system.

The adjoint is the discretised continuous adjoint, not the transpose of the
discrete forward operator; gradients built from it agree with finite
differences of the discrete cost only up to O(tau).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .forward import MaterialParams, _check_residual, _factor, _interior, _interleave
from .grid import SpaceGrid, TimeGrid
from .kernel import Kernel

__all__ = ["AdjointSpec", "AdjointSolution", "AdjointSolver", "solve_adjoint"]


@dataclass
class AdjointSpec:
    """Terminal data and forcings of one adjoint solve.

    ``forcing_p`` and ``forcing_h`` may be None, a single field (constant in
    time) or an array of shape ``(n_t + 1, n_x + 1)``. Missing terminal
    fields are zero.
    """

    space: SpaceGrid
    time: TimeGrid
    params: MaterialParams = field(default_factory=MaterialParams)
    kernel: Kernel = field(default_factory=Kernel)
    terminal_u0: Optional[np.ndarray] = None
    terminal_u1: Optional[np.ndarray] = None
    terminal_theta0: Optional[np.ndarray] = None
    forcing_p: Optional[np.ndarray] = None
    forcing_h: Optional[np.ndarray] = None


@dataclass
class AdjointSolution:
    u_star: np.ndarray
    theta_star: np.ndarray
    space: SpaceGrid
    time: TimeGrid


def assemble_adjoint_system(params: MaterialParams, grid: SpaceGrid, tau: float,
                            kernel: Kernel) -> sp.csc_matrix:
    M = _interior(grid.mass)
    S = _interior(grid.stiffness)
    G = _interior(grid.gradient_coupling)
    k0 = float(kernel(0.0))
    uu = params.rho * M + tau**2 * params.mu * S + tau**2 * (params.lam + params.mu) * S
    ut = -tau * params.gamma * params.T0 * G
    tu = -tau * params.gamma * G
    tt = params.rho * params.C_s * M + tau * params.kappa * S + tau**2 * k0 * S
    return _interleave(uu, ut, tu, tt)


def _levels(val, space: SpaceGrid, time: TimeGrid) -> Optional[np.ndarray]:
    if val is None:
        return None
    val = np.asarray(val, dtype=float)
    if val.ndim == 1:
        val = np.broadcast_to(space.check(val), (time.n_t + 1, space.n_nodes))
    elif val.shape != (time.n_t + 1, space.n_nodes):
        raise ValueError(f"adjoint forcing has shape {val.shape}")
    if not np.all(np.isfinite(val)):
        raise ValueError("adjoint forcing has non-finite values")
    return val


def _terminal(val, space: SpaceGrid, name: str) -> np.ndarray:
    if val is None:
        return np.zeros(space.n_nodes)
    val = space.check(val)
    if not np.all(np.isfinite(val)):
        raise ValueError(f"{name} has non-finite values")
    return val


class AdjointSolver:
    def __init__(self, params: MaterialParams, kernel: Kernel, space: SpaceGrid,
                 time: TimeGrid):
        self.params, self.kernel, self.space, self.time = params, kernel, space, time
        self.matrix = assemble_adjoint_system(params, space, time.tau, kernel)
        self._lu = _factor(self.matrix)
        self.M_rows = sp.csr_matrix(space.mass[1:-1, :])
        self.M = _interior(space.mass)
        self.S = _interior(space.stiffness)
        self.G = _interior(space.gradient_coupling)
        self.lags = kernel.lags(time.n_t, time.tau)

    def solve(self, spec: AdjointSpec, verify: bool = False) -> AdjointSolution:
        prm, space, time = self.params, self.space, self.time
        n_t, tau = time.n_t, time.tau
        n_in = space.n_x - 1
        us = np.zeros((n_t + 1, space.n_nodes))
        ts = np.zeros_like(us)
        us[n_t, 1:-1] = _terminal(spec.terminal_u0, space, "terminal_u0")[1:-1]
        ts[n_t, 1:-1] = _terminal(spec.terminal_theta0, space, "terminal_theta0")[1:-1]
        vel = _terminal(spec.terminal_u1, space, "terminal_u1")[1:-1]
        fp = _levels(spec.forcing_p, space, time)
        fh = _levels(spec.forcing_h, space, time)
        p_load = None if fp is None else (self.M_rows @ fp.T).T
        h_load = None if fh is None else (self.M_rows @ fh.T).T

        M, S, G = self.M, self.S, self.G
        rhs = np.empty(2 * n_in)
        S_theta = np.zeros((n_t + 1, n_in))
        for i in range(n_t - 1, -1, -1):
            u_next, t_next = us[i + 1, 1:-1], ts[i + 1, 1:-1]
            ru = prm.rho * (M @ (u_next - tau * vel)) - tau * prm.gamma * prm.T0 * (G @ t_next)
            rt = prm.rho * prm.C_s * (M @ t_next)
            if p_load is not None:
                ru += tau**2 * p_load[i]
            if h_load is not None:
                rt += tau * h_load[i]
            if i < n_t - 1:
                # lagged memory terms j = i+1 .. n_t-1
                w = self.lags[1:n_t - i] * tau
                rt -= tau * (w @ S_theta[i + 1:n_t])
            rhs[0::2], rhs[1::2] = ru, rt
            sol = self._lu.solve(rhs)
            if verify:
                _check_residual(self.matrix, sol, rhs)
            us[i, 1:-1], ts[i, 1:-1] = sol[0::2], sol[1::2]
            S_theta[i] = S @ ts[i, 1:-1]
            vel = (u_next - us[i, 1:-1]) / tau
        return AdjointSolution(us, ts, space, time)


@lru_cache(maxsize=32)
def _solver(params, kernel, space, time) -> AdjointSolver:
    return AdjointSolver(params, kernel, space, time)


def solve_adjoint(spec: AdjointSpec, verify: bool = False) -> AdjointSolution:
    return _solver(spec.params, spec.kernel, spec.space, spec.time).solve(spec, verify=verify)
