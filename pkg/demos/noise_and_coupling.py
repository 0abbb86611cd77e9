"""Noise model and the coupling number of copper.

Noise is drawn on a 1000-node grid with standard deviation level * max|data|
and then restricted to the working grid; e is its L2 norm there.
"""
import numpy as np

from thermoisp import SpaceGrid
from thermoisp.experiments import COPPER, DEFAULT_SEED, build_case, nondimensional_epsilon
from thermoisp.measurements import add_noise

eps, gamma = nondimensional_epsilon(**COPPER)
print(f"copper: epsilon = {eps:.5f}, gamma = {gamma:.4e}")

case = build_case()
fine, work = SpaceGrid(1000), SpaceGrid(50)
exact = case.exact_measurement(fine.nodes)
for level in (0.01, 0.03, 0.05):
    _, e = add_noise(exact, work, level, seed=DEFAULT_SEED)
    es = [add_noise(exact, work, level, seed=s)[1] for s in range(200)]
    print(f"{level:.0%}: e = {e:.4e} (seed {DEFAULT_SEED}), mean over 200 seeds {np.mean(es):.4e}")
