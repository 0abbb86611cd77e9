"""Tikhonov cost functionals, adjoint L2 gradients and Sobolev gradients."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.linalg import solve_banded

from .adjoint import AdjointSpec, solve_adjoint
from .forward import ProblemSpec, solve_sensitivity
from .grid import SpaceGrid, inner_l2, norm_l2
from .measurements import MeasurementKind, apply_measurement

__all__ = [
    "CostConfig",
    "SobolevWeights",
    "forward_image",
    "cost",
    "cost_from_image",
    "grad_l2",
    "gradient_from_residual",
    "assemble_elliptic",
    "grad_sobolev",
    "optimal_step",
]

Weight = Union[float, Callable, np.ndarray]


@dataclass
class CostConfig:
    """Data defining ``F(f) = 1/2 ||A f - R||^2 + beta/2 ||f||^2``.

    ``A`` is the measurement of the source-only solve with source ``g f``
    and ``R`` the remainder. ``problem`` supplies grids, material and kernel;
    its sources and initial data are not used.
    """

    isp: MeasurementKind
    remainder: np.ndarray
    g: Callable
    problem: ProblemSpec
    beta: float = 0.0

    def __post_init__(self):
        self.isp = MeasurementKind.parse(self.isp)
        if not self.beta >= 0:
            raise ValueError(f"beta must be nonnegative, got {self.beta!r}")
        self.remainder = self.problem.space.check(self.remainder)

    @property
    def space(self) -> SpaceGrid:
        return self.problem.space


@dataclass(frozen=True)
class SobolevWeights:
    """Positive weights ``r0``, ``r1`` of the elliptic smoothing problem.

    Each may be a constant, a callable of ``x`` or an array of nodal values
    (interpolated linearly between nodes).
    """

    r0: Weight = 1.0
    r1: Weight = 0.01

    def sample(self, which: str, x: np.ndarray, grid: SpaceGrid) -> np.ndarray:
        w = getattr(self, which)
        # points outside [0, 1] take the boundary value
        xc = np.clip(x, 0.0, 1.0)
        if callable(w):
            vals = np.asarray(w(xc), dtype=float) * np.ones_like(xc)
        elif np.ndim(w) == 0:
            vals = np.full_like(xc, float(w))
        else:
            vals = np.interp(xc, grid.nodes, grid.check(w))
        if not np.all(vals > 0):
            raise ValueError(f"Sobolev weight {which} must be strictly positive")
        return vals


def forward_image(f, cfg: CostConfig) -> np.ndarray:
    """Measurement of the source-only solve driven by ``g f``."""
    sol = solve_sensitivity(f, cfg.g, cfg.problem, into=cfg.isp.source_slot)
    return apply_measurement(sol, cfg.isp)


def cost_from_image(image, f, cfg: CostConfig) -> float:
    grid = cfg.space
    val = 0.5 * norm_l2(image - cfg.remainder, grid) ** 2
    if cfg.beta:
        val += 0.5 * cfg.beta * norm_l2(f, grid) ** 2
    return val


def cost(f, cfg: CostConfig) -> float:
    f = cfg.space.check(f)
    return cost_from_image(forward_image(f, cfg), f, cfg)


def gradient_from_residual(residual, f, cfg: CostConfig) -> np.ndarray:
    """L2 gradient given the measurement residual ``A f - R``."""
    prob = cfg.problem
    spec = AdjointSpec(prob.space, prob.time, prob.params, prob.kernel)
    if cfg.isp is MeasurementKind.FINAL_TIME_U:
        spec.terminal_u1 = residual
    elif cfg.isp is MeasurementKind.TIME_AVG_U:
        spec.forcing_p = residual
    else:
        spec.forcing_h = residual
    adj = solve_adjoint(spec)
    gt = np.asarray(cfg.g(prob.time.times), dtype=float) * np.ones(prob.time.n_t + 1)
    w = prob.time.simpson * gt
    if cfg.isp is MeasurementKind.FINAL_TIME_U:
        grad = -(w @ adj.u_star) / prob.params.rho
    elif cfg.isp is MeasurementKind.TIME_AVG_U:
        grad = w @ adj.u_star
    else:
        grad = w @ adj.theta_star
    if cfg.beta:
        grad = grad + cfg.beta * f
    return grad


def grad_l2(f, cfg: CostConfig) -> np.ndarray:
    """Adjoint-based L2 gradient: one sensitivity solve and one adjoint solve."""
    f = cfg.space.check(f)
    residual = forward_image(f, cfg) - cfg.remainder
    return gradient_from_residual(residual, f, cfg)


def _elliptic_bands(weights: SobolevWeights, grid: SpaceGrid) -> np.ndarray:
    n, h = grid.n_x, grid.h
    x = grid.nodes
    r0 = weights.sample("r0", x, grid)
    # r1 at half points x_{i-1/2}, i = 0 .. n+1 (both ghost halves included)
    r1 = weights.sample("r1", (np.arange(n + 2) - 0.5) * h, grid)
    left, right = r1[:-1] / h**2, r1[1:] / h**2
    ab = np.zeros((3, n + 1))
    ab[1] = left + right + r0
    ab[0, 1:] = -right[:-1]
    ab[2, :-1] = -left[1:]
    # ghost points mirror the first interior neighbour
    ab[0, 1] = -(left[0] + right[0])
    ab[2, n - 1] = -(left[n] + right[n])
    return ab


def assemble_elliptic(weights: SobolevWeights, grid: SpaceGrid) -> np.ndarray:
    """Dense ``(n_x + 1)``-square matrix of the Neumann finite difference scheme."""
    ab = _elliptic_bands(weights, grid)
    n = grid.n_nodes
    A = np.diag(ab[1])
    A[np.arange(n - 1), np.arange(1, n)] = ab[0, 1:]
    A[np.arange(1, n), np.arange(n - 1)] = ab[2, :-1]
    return A


def grad_sobolev(gl2, weights: SobolevWeights, grid: SpaceGrid) -> np.ndarray:
    """Solve ``-(r1 K')' + r0 K = gl2`` with zero Neumann data."""
    gl2 = grid.check(gl2)
    if not np.all(np.isfinite(gl2)):
        raise ValueError("L2 gradient has non-finite values")
    ab = _elliptic_bands(weights, grid)
    try:
        return solve_banded((1, 1), ab, gl2)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"elliptic Sobolev matrix is singular: {exc}") from exc


def optimal_step(residual, image_dir, f, direction, beta: float, grid: SpaceGrid) -> float:
    """Exact minimiser of ``tau -> F(f - tau * direction)``.

    ``residual`` is ``A f - R`` and ``image_dir`` is ``A direction``.
    """
    num = inner_l2(residual, image_dir, grid)
    den = norm_l2(image_dir, grid) ** 2
    if beta:
        num += beta * inner_l2(f, direction, grid)
        den += beta * norm_l2(direction, grid) ** 2
    if not den > 0:
        raise ValueError("search direction is annihilated: zero step denominator")
    return num / den
