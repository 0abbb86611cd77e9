"""Measurement maps, remainders against the known-data solve, and noise."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .forward import ForwardSolution
from .grid import SpaceGrid, load_field_csv, norm_l2, project_fine_to_working, save_field_csv

__all__ = [
    "MeasurementKind",
    "Measurement",
    "apply_measurement",
    "compute_remainder",
    "add_noise",
    "noise_sigma",
    "save_measurement",
    "load_measurement",
]


class MeasurementKind(enum.Enum):
    """Observed functional of the state, one per inverse problem."""

    FINAL_TIME_U = "1.1"
    TIME_AVG_U = "1.2"
    TIME_AVG_THETA = "2"

    @property
    def source_slot(self) -> str:
        """Which source carries the unknown ``g f``: ``"p"`` or ``"h"``."""
        return "h" if self is MeasurementKind.TIME_AVG_THETA else "p"

    @classmethod
    def parse(cls, value) -> "MeasurementKind":
        if isinstance(value, cls):
            return value
        text = str(value).strip().lower()
        aliases = {
            "1.1": cls.FINAL_TIME_U, "isp1.1": cls.FINAL_TIME_U, "final_time_u": cls.FINAL_TIME_U,
            "1.2": cls.TIME_AVG_U, "isp1.2": cls.TIME_AVG_U, "time_avg_u": cls.TIME_AVG_U,
            "2": cls.TIME_AVG_THETA, "isp2": cls.TIME_AVG_THETA,
            "time_avg_theta": cls.TIME_AVG_THETA,
        }
        try:
            return aliases[text]
        except KeyError:
            raise ValueError(f"unknown problem {value!r}; expected one of 1.1, 1.2, 2") from None


@dataclass
class Measurement:
    kind: MeasurementKind
    data: np.ndarray
    grid: SpaceGrid
    noise_level: float = 0.0
    noise_e: float = 0.0
    seed: Optional[int] = None


def apply_measurement(sol: ForwardSolution, kind: MeasurementKind) -> np.ndarray:
    kind = MeasurementKind.parse(kind)
    if kind is MeasurementKind.FINAL_TIME_U:
        return sol.u[-1].copy()
    traj = sol.u if kind is MeasurementKind.TIME_AVG_U else sol.theta
    return sol.time.simpson @ traj


def compute_remainder(measured, star_solution: ForwardSolution, kind) -> np.ndarray:
    """Data minus the part explained by the known sources and initial data."""
    measured = star_solution.space.check(measured)
    return measured - apply_measurement(star_solution, kind)


def noise_sigma(exact_fine, level: float) -> float:
    return float(level) * float(np.max(np.abs(exact_fine)))


def add_noise(exact_fine, working: SpaceGrid, level: float, seed=None,
              rng: Optional[np.random.Generator] = None) -> tuple[np.ndarray, float]:
    """Perturb fine-grid data with white Gaussian noise and restrict it.

    ``level`` is the relative level (0.01 for 1 %); the standard deviation is
    ``level * max |exact|`` taken on the fine grid. Returns the noisy working
    field and the realised distance ``e`` to the restricted exact data.
    """
    if not level >= 0:
        raise ValueError(f"noise level must be nonnegative, got {level!r}")
    exact_fine = np.asarray(exact_fine, dtype=float)
    exact = project_fine_to_working(exact_fine, working)
    if level == 0:
        return exact, 0.0
    if rng is None:
        rng = np.random.default_rng(seed)
    sigma = noise_sigma(exact_fine, level)
    noisy = project_fine_to_working(exact_fine + rng.normal(0.0, sigma, exact_fine.shape), working)
    return noisy, norm_l2(noisy - exact, working)


def save_measurement(path, meas: Measurement) -> tuple[Path, Path]:
    """Write ``path`` as (x, value) CSV and ``path.meta`` as key=value lines."""
    path = Path(path)
    save_field_csv(path, meas.grid, meas.data, name="value")
    meta = path.with_suffix(path.suffix + ".meta")
    lines = [
        f"kind={meas.kind.value}",
        f"noise_level={meas.noise_level!r}",
        f"seed={'' if meas.seed is None else meas.seed}",
        f"noise_e={meas.noise_e!r}",
    ]
    meta.write_text("\n".join(lines) + "\n")
    return path, meta


def load_measurement(path) -> Measurement:
    path = Path(path)
    grid, data = load_field_csv(path)
    meta = {}
    for line in path.with_suffix(path.suffix + ".meta").read_text().splitlines():
        if line.strip() and not line.lstrip().startswith("#"):
            key, _, val = line.partition("=")
            meta[key.strip()] = val.strip()
    seed = meta.get("seed") or None
    return Measurement(MeasurementKind.parse(meta["kind"]), data, grid,
                       float(meta.get("noise_level", 0.0)), float(meta.get("noise_e", 0.0)),
                       None if seed is None else int(seed))
