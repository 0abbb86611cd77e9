"""Adjoint gradient against central differences of the cost.

The gradient is computed by one direct and one adjoint solve; the finite
difference needs two extra direct solves per direction. The gap between
them is the O(tau) price of discretising the continuous adjoint, so it
halves when n_t doubles.
"""
import numpy as np

from thermoisp import SpaceGrid, TimeGrid
from thermoisp.experiments import build_case
from thermoisp.forward import ProblemSpec
from thermoisp.gradients import CostConfig, cost, grad_l2
from thermoisp.grid import inner_l2

case = build_case()
space = SpaceGrid(50)
x = space.nodes
rng = np.random.default_rng(0)


def smooth(modes=5):
    k = np.arange(1, modes + 1)
    return np.sin(np.pi * np.outer(x, k)) @ (rng.normal(size=modes) / k)


f, d, R = smooth(), smooth(), smooth()
for isp in ("1.1", "1.2", "2"):
    for n_t in (50, 100, 200):
        prob = ProblemSpec(space, TimeGrid(n_t), case.params, case.kernel)
        cfg = CostConfig(isp, R, case.g, prob)
        fd = (cost(f + 1e-3 * d, cfg) - cost(f - 1e-3 * d, cfg)) / 2e-3
        ad = inner_l2(grad_l2(f, cfg), d, space)
        print(f"ISP{isp:3s} n_t = {n_t:3d}  adjoint {ad:+.6e}  fd {fd:+.6e}  rel {abs(ad - fd) / abs(fd):.2e}")
