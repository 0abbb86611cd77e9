"""Landweber, steepest descent and Fletcher-Reeves conjugate gradient drivers."""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .forward import ProblemSpec, solve_sensitivity
from .gradients import (
    CostConfig,
    SobolevWeights,
    cost_from_image,
    forward_image,
    gradient_from_residual,
    grad_l2,
    grad_sobolev,
    optimal_step,
)
from .grid import norm_l2
from .measurements import MeasurementKind, apply_measurement

__all__ = [
    "Method",
    "GradientKind",
    "ReconstructionConfig",
    "ReconstructionResult",
    "landweber",
    "steepest_descent",
    "conjugate_gradient",
    "reconstruct",
    "morozov_stop",
    "operator_norm_estimate",
    "landweber_threshold",
    "save_history_csv",
]


class Method(enum.Enum):
    LANDWEBER = "landweber"
    STEEPEST_DESCENT = "sd"
    CONJUGATE_GRADIENT = "cg"


class GradientKind(enum.Enum):
    L2 = "l2"
    SOBOLEV = "sobolev"


@dataclass
class ReconstructionConfig:
    """Settings of one reconstruction run.

    ``problem`` provides grids, material and kernel and ``g`` the known time
    profile of the unknown source. ``noise_e`` is the realised noise level
    used by the discrepancy principle; zero disables it.
    """

    isp: MeasurementKind
    problem: ProblemSpec
    g: Callable
    method: Method = Method.LANDWEBER
    gradient: GradientKind = GradientKind.L2
    alpha: float = 1.0
    beta: float = 0.0
    max_iter: int = 200
    morozov_r: float = 1.001
    noise_e: float = 0.0
    f0: Optional[np.ndarray] = None
    weights: SobolevWeights = field(default_factory=SobolevWeights)
    divergence_bound: float = 1e6
    keep_iterates: bool = False

    def __post_init__(self):
        self.isp = MeasurementKind.parse(self.isp)
        self.method = Method(self.method)
        self.gradient = GradientKind(self.gradient)
        if self.method is Method.LANDWEBER and not self.alpha > 0:
            raise ValueError(f"Landweber relaxation alpha must be positive, got {self.alpha!r}")
        if not self.beta >= 0:
            raise ValueError(f"beta must be nonnegative, got {self.beta!r}")
        if not self.morozov_r > 1:
            raise ValueError(f"discrepancy factor r must exceed 1, got {self.morozov_r!r}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 0:
            raise ValueError(f"max_iter must be a nonnegative integer, got {self.max_iter!r}")
        if not self.noise_e >= 0:
            raise ValueError(f"noise level e must be nonnegative, got {self.noise_e!r}")

    def initial_guess(self) -> np.ndarray:
        space = self.problem.space
        if self.f0 is None:
            return np.zeros(space.n_nodes)
        return space.check(self.f0).copy()

    def cost_config(self, remainder) -> CostConfig:
        return CostConfig(self.isp, remainder, self.g, self.problem, self.beta)


@dataclass
class ReconstructionResult:
    """Final iterate and per-iteration histories (length ``K + 1``).

    ``iterates`` holds every accepted iterate when the run was configured
    with ``keep_iterates``.
    """

    f_final: np.ndarray
    K: int
    cost_history: list
    discrepancy_history: list
    error_history: list
    stop_reason: str
    diverged: bool = False
    e_r: Optional[float] = None
    DF: float = float("nan")
    P: float = float("nan")
    iterates: Optional[list] = None

    @property
    def metrics(self) -> dict:
        return {"e_r": self.e_r, "DF": self.DF, "P": self.P}


def morozov_stop(E_k: float, r: float, e: float) -> bool:
    """Discrepancy principle: true iff ``E_k <= r e`` for a positive noise level."""
    return e > 0 and E_k <= r * e


class _Tracker:
    """Collects histories and builds the result object."""

    def __init__(self, cfg: ReconstructionConfig, ccfg: CostConfig, truth):
        self.grid = cfg.problem.space
        self.ccfg = ccfg
        self.truth = None if truth is None else self.grid.check(truth)
        self.truth_norm = None if truth is None else norm_l2(truth, self.grid)
        self.costs, self.discs, self.errs = [], [], []
        self.iterates = [] if cfg.keep_iterates else None

    def error(self, f) -> Optional[float]:
        if self.truth is None:
            return None
        return norm_l2(self.truth - f, self.grid) / self.truth_norm

    def record(self, f, image):
        self.costs.append(cost_from_image(image, f, self.ccfg))
        self.discs.append(norm_l2(image - self.ccfg.remainder, self.grid))
        self.errs.append(self.error(f))
        if self.iterates is not None:
            self.iterates.append(f.copy())

    def pop(self):
        for hist in (self.costs, self.discs, self.errs, self.iterates):
            if hist is not None:
                hist.pop()

    def result(self, f, reason: str, diverged: bool = False) -> ReconstructionResult:
        return ReconstructionResult(
            f_final=f, K=len(self.costs) - 1, cost_history=self.costs,
            discrepancy_history=self.discs, error_history=self.errs, stop_reason=reason,
            diverged=diverged, e_r=self.errs[-1], DF=self.discs[-1], P=norm_l2(f, self.grid),
            iterates=self.iterates)


def _diverging(f, bound: float) -> bool:
    return not np.all(np.isfinite(f)) or float(np.max(np.abs(f))) > bound


def landweber(cfg: ReconstructionConfig, remainder, truth=None) -> ReconstructionResult:
    """Successive approximations ``f <- f - alpha * A(A f - R)``.

    ``A`` is the measurement of a source-only direct solve, so every
    iteration costs exactly two direct solves.
    """
    ccfg = cfg.cost_config(remainder)
    track = _Tracker(cfg, ccfg, truth)
    slot = cfg.isp.source_slot
    f = cfg.initial_guess()
    for k in range(cfg.max_iter + 1):
        image = forward_image(f, ccfg)
        track.record(f, image)
        if morozov_stop(track.discs[-1], cfg.morozov_r, cfg.noise_e):
            return track.result(f, "discrepancy")
        if k == cfg.max_iter:
            break
        resid = image - ccfg.remainder
        corr = apply_measurement(solve_sensitivity(resid, cfg.g, cfg.problem, into=slot), cfg.isp)
        f_new = f - cfg.alpha * corr
        if _diverging(f_new, cfg.divergence_bound):
            return track.result(f, "diverged", diverged=True)
        f = f_new
    return track.result(f, "max_iter")


def _search_direction(f, resid, cfg: ReconstructionConfig, ccfg: CostConfig) -> np.ndarray:
    grad = gradient_from_residual(resid, f, ccfg)
    if cfg.gradient is GradientKind.SOBOLEV:
        grad = grad_sobolev(grad, cfg.weights, cfg.problem.space)
    return grad


def _descent(cfg: ReconstructionConfig, remainder, truth, conjugate: bool) -> ReconstructionResult:
    ccfg = cfg.cost_config(remainder)
    grid = cfg.problem.space
    track = _Tracker(cfg, ccfg, truth)
    f = cfg.initial_guess()
    image = forward_image(f, ccfg)
    track.record(f, image)
    lam_prev = None
    d = None
    for _ in range(cfg.max_iter):
        if morozov_stop(track.discs[-1], cfg.morozov_r, cfg.noise_e):
            return track.result(f, "discrepancy")
        resid = image - ccfg.remainder
        lam = -_search_direction(f, resid, cfg, ccfg)
        lam_sq = norm_l2(lam, grid) ** 2
        if lam_sq == 0:
            return track.result(f, "zero_gradient")
        if conjugate and lam_prev is not None:
            zeta = lam_sq / norm_l2(lam_prev, grid) ** 2
            d = lam + zeta * d
        else:
            d = lam
        image_d = forward_image(d, ccfg)
        try:
            step = -optimal_step(resid, image_d, f, d, cfg.beta, grid)
        except ValueError:
            return track.result(f, "zero_gradient")
        f_new = f + step * d
        image_new = forward_image(f_new, ccfg)
        track.record(f_new, image_new)
        if track.costs[-1] > track.costs[-2]:
            track.pop()
            return track.result(f, "cost_increase")
        f, image, lam_prev = f_new, image_new, lam
    if morozov_stop(track.discs[-1], cfg.morozov_r, cfg.noise_e):
        return track.result(f, "discrepancy")
    return track.result(f, "max_iter")


def steepest_descent(cfg: ReconstructionConfig, remainder, truth=None) -> ReconstructionResult:
    """Gradient descent with the exact quadratic line search."""
    return _descent(cfg, remainder, truth, conjugate=False)


def conjugate_gradient(cfg: ReconstructionConfig, remainder, truth=None) -> ReconstructionResult:
    """Fletcher-Reeves conjugate gradients; the first step is a steepest descent step."""
    return _descent(cfg, remainder, truth, conjugate=True)


def reconstruct(cfg: ReconstructionConfig, remainder, truth=None) -> ReconstructionResult:
    driver = {
        Method.LANDWEBER: landweber,
        Method.STEEPEST_DESCENT: steepest_descent,
        Method.CONJUGATE_GRADIENT: conjugate_gradient,
    }[cfg.method]
    return driver(cfg, remainder, truth)


def operator_norm_estimate(isp, iters: int, problem: ProblemSpec, g: Callable,
                           start=None) -> float:
    """Power iteration for ``||A||^2`` using the adjoint-based normal operator.

    Each step applies ``f -> grad`` of ``1/2 ||A f||^2`` (one direct and one
    adjoint solve). Returns the last Rayleigh quotient.
    """
    if iters < 1:
        raise ValueError(f"power iteration needs iters >= 1, got {iters}")
    grid = problem.space
    ccfg = CostConfig(isp, np.zeros(grid.n_nodes), g, problem, 0.0)
    v = np.sin(np.pi * grid.nodes) if start is None else grid.check(start).copy()
    v = v / norm_l2(v, grid)
    est = 0.0
    for _ in range(iters):
        w = grad_l2(v, ccfg)
        est = float(v @ (grid.mass @ w))
        v = w / norm_l2(w, grid)
    return est


def landweber_threshold(norm_sq: float) -> float:
    """Relaxation above which Landweber diverges, ``2 / ||A||^2``.

    The sufficient convergence condition ``alpha < 1 / ||A||^2`` is half
    of this value.
    """
    if not norm_sq > 0:
        raise ValueError(f"operator norm estimate must be positive, got {norm_sq!r}")
    return 2.0 / norm_sq


def save_history_csv(path, result: ReconstructionResult) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "cost", "discrepancy", "e_r"])
        for k, (c, d, e) in enumerate(zip(result.cost_history, result.discrepancy_history,
                                           result.error_history)):
            writer.writerow([k, repr(c), repr(d), "" if e is None else repr(e)])
    return path
