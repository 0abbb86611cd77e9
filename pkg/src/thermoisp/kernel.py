"""Exponential memory kernel and its discrete convolution quadratures."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Kernel", "kernel_eval", "conv_forward", "conv_adjoint"]


@dataclass(frozen=True)
class Kernel:
    """Memory kernel ``k(t) = a * exp(-b t)`` with ``a, b > 0``."""

    a: float = 0.01
    b: float = 2.0

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValueError(f"kernel needs a > 0 and b > 0, got a={self.a}, b={self.b}")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("memory kernel is only defined for t >= 0")
        return self.a * np.exp(-self.b * t)

    def lags(self, n_t: int, tau: float) -> np.ndarray:
        """Tabulated values ``k(m * tau)`` for ``m = 0..n_t``."""
        return self(np.arange(n_t + 1) * tau)


def kernel_eval(k: Kernel, t: float) -> float:
    return float(k(t))



def conv_forward(k, z, tau: float, i: int) -> np.ndarray:
    """Causal quadrature ``sum_{j=1}^{i} k(t_i - t_j) z_j tau``.

    ``z`` holds time levels ``z_0 .. z_n`` along its first axis (``z_0`` is
    never used). ``k`` is a :class:`Kernel` or a tabulated array ``k(m tau)``.
    """
    z = np.asarray(z, dtype=float)
    n_t = z.shape[0] - 1
    if not 0 <= i <= n_t:
        raise IndexError(f"time level {i} outside 0..{n_t}")
    lags = k.lags(n_t, tau) if isinstance(k, Kernel) else np.asarray(k, dtype=float)
    if i == 0:
        return np.zeros(z.shape[1:])
    # level j is weighted by k((i - j) tau)
    w = lags[i - 1::-1] * tau
    return np.tensordot(w, z[1:i + 1], axes=(0, 0))


def conv_adjoint(k, z, tau: float, i: int) -> np.ndarray:
    """Anticausal quadrature ``sum_{j=i}^{n-1} k(t_j - t_i) z_j tau``."""
    z = np.asarray(z, dtype=float)
    n_t = z.shape[0] - 1
    if not 0 <= i <= n_t:
        raise IndexError(f"time level {i} outside 0..{n_t}")
    lags = k.lags(n_t, tau) if isinstance(k, Kernel) else np.asarray(k, dtype=float)
    if i == n_t:
        return np.zeros(z.shape[1:])
    w = lags[: n_t - i] * tau
    return np.tensordot(w, z[i:n_t], axes=(0, 0))
