"""The boundary driven box.

Particles enter on the left, leave on the right and move symmetrically in
between.  The stationary density is linear; annihilations happen at rate
1/(2M).  A tilt against the flow makes the right-end density decay
geometrically in M.
"""

import math

import numpy as np

from sepmix.boundary import (
    BoundaryChainSpec,
    annihilation_rate,
    blythe_decay_check,
    exact_boundary_profile,
    linear_profile,
    mc_boundary_profile,
)

M = 8
spec = BoundaryChainSpec(M)
dens, se = mc_boundary_profile(spec, 50_000, seed=1)
print(" site  exact   linear  simulated")
for i, (a, b, c, s) in enumerate(zip(exact_boundary_profile(spec), linear_profile(M), dens, se), start=1):
    print(f"{i:5d}  {a:.4f}  {b:.4f}  {c:.4f} +- {s:.4f}")

rate, err = annihilation_rate(BoundaryChainSpec(5), 5_000, 20, seed=2)
print(f"\nannihilations per unit time, M=5: {rate:.4f} +- {err:.4f} (1/(2M) = 0.1)")

fit = blythe_decay_check(0.25)
print(f"\ntilted box, gamma=0.25: slope {fit.slope:.3f}, predicted {fit.predicted_slope:.3f}")
for m, d in zip(fit.M, fit.last_density):
    print(f"  M={m:2d}  E[sigma(M)] = {d:.3e}")
print(f"q^(-1/2) per site = {math.sqrt(1 / 3):.4f}; observed ratio {np.exp(fit.slope):.4f}")
