"""Direct solver check against the manufactured solution.

The benchmark fixes u = (t^3 + t + 1)/10 (1 - cos 2 pi x) and
theta = 2 (t^2 + 1) x (1 - x)^2, so the time average of u over [0, 1] is
(7/40)(1 - cos 2 pi x). Backward Euler is first order in time; halving tau
should roughly halve the error.
"""
import numpy as np

from thermoisp import SpaceGrid, TimeGrid, solve_forward
from thermoisp.experiments import build_case
from thermoisp.grid import norm_l2
from thermoisp.measurements import apply_measurement

case = build_case("f0", "1.2")
space = SpaceGrid(50)
exact = 7 / 40 * (1 - np.cos(2 * np.pi * space.nodes))

prev = None
for n_t in (20, 40, 80, 160):
    sol = solve_forward(case.full_problem(space, TimeGrid(n_t)))
    chi = apply_measurement(sol, "1.2")
    err = norm_l2(chi - exact, space) / norm_l2(exact, space)
    ratio = "" if prev is None else f"  ratio {prev / err:.2f}"
    print(f"n_t = {n_t:4d}  relative error {err:.3e}{ratio}")
    prev = err

# temperature at the end of the run against the exact profile
theta_T = sol.theta[-1]
exact_theta = case.exact_theta(space.nodes, 1.0)
print("max |theta(T) - exact| =", np.abs(theta_T - exact_theta).max())
