"""Tikhonov weight sweep for steepest descent.

Raising beta trades data fit for a smaller source: the discrepancy DF
grows and the norm P of the reconstruction shrinks. The rows printed here
are the points of the DF-versus-P curve.
"""
from thermoisp.experiments import RunConfig, run_sweep

betas = [0.0, 1e-3, 1e-2, 1e-1]
rows = run_sweep(RunConfig(method="sd", gradient="l2"), "beta", betas, workers=2)
for row in rows:
    print(f"beta = {row['beta']:<6g} DF = {row['DF']:.4e}  P = {row['P']:.4f}  e_r = {row['e_r']:.4f}")
