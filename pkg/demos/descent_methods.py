"""Steepest descent and conjugate gradients, L2 versus Sobolev gradients.

The L2 gradient vanishes at x = 0 and x = 1, so iterates starting from zero
can never recover f1(0) = f1(1) = 0.2. The Sobolev gradient solves
-(r1 K')' + r0 K = grad J with Neumann ends and moves the boundary values.
"""
from thermoisp.experiments import RunConfig, run_reconstruction

rows = []
for target in ("f0", "f1"):
    for method in ("sd", "cg"):
        for gradient in ("l2", "sobolev"):
            out = run_reconstruction(RunConfig(target=target, method=method, gradient=gradient))
            f = out.result.f_final
            rows.append((target, method, gradient, out.result.K, out.result.e_r, f[0], f[-1]))

print(f"{'target':6s} {'method':6s} {'grad':8s} {'K':>4s} {'e_r':>8s} {'f(0)':>8s} {'f(1)':>8s}")
for t, m, g, K, e, a, b in rows:
    print(f"{t:6s} {m:6s} {g:8s} {K:4d} {e:8.4f} {a:8.4f} {b:8.4f}")

# with noise every method stops on the discrepancy principle
for method in ("sd", "cg"):
    s = run_reconstruction(RunConfig(method=method, noise=0.05)).summary
    print(f"{method} at 5% noise: K = {s['K']}, e_r = {s['e_r']:.4f}, stop = {s['stop_reason']}")
