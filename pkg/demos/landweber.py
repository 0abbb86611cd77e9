"""Landweber on the time-averaged displacement problem.

First estimate where the iteration stops converging (2 / ||A||^2 by power
iteration), then run noise-free and with 5 % noise. With noise the
discrepancy principle stops the iteration once ||A f - R|| <= r e.
"""
from thermoisp.experiments import RunConfig, prepare_data, run_reconstruction
from thermoisp.reconstruction import landweber_threshold, operator_norm_estimate

case, space, time, _, _ = prepare_data(RunConfig())
norm_sq = operator_norm_estimate("1.2", 20, case.problem(space, time), case.g)
print(f"||A||^2 ~ {norm_sq:.4f}, divergence threshold 2/||A||^2 ~ {landweber_threshold(norm_sq):.3f}")

for target in ("f0", "f1"):
    out = run_reconstruction(RunConfig(target=target, alpha=6.0))
    print(target, "noise-free:", {k: out.summary[k] for k in ("K", "e_r", "DF", "P")})

out = run_reconstruction(RunConfig(alpha=6.0, noise=0.05))
s = out.summary
print(f"5% noise: e = {s['noise_e']:.4e}, stopped at K = {s['K']} ({s['stop_reason']}), "
      f"e_r = {s['e_r']:.4f}, DF = {s['DF']:.4e}")

# past the threshold the iterates blow up and the run is flagged
bad = run_reconstruction(RunConfig(alpha=4 * landweber_threshold(norm_sq)))
print("alpha = 4x threshold:", bad.summary["stop_reason"], "at K =", bad.summary["K"])
