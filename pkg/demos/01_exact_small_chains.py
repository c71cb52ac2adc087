"""Exact computations on small segments.

Builds the generator for a random ballistic environment, compares the product
stationary law with a direct null-space solve, and tracks the worst-case
distance to equilibrium over time.
"""

import math

import numpy as np

from sepmix.env import Uniform, constant_environment, sample_environment
from sepmix.exact import (
    exact_mixing_time,
    exact_pi_A,
    pi_A_bound,
    stationary_product,
    stationary_solve,
    worst_case_tv,
)

# two sites, symmetric rates: the distance decays like exp(-t)/2
two = constant_environment(0.5, 2)
print(f"two-site mixing time {exact_mixing_time(two, 2, 1):.6f} (ln 2 = {math.log(2):.6f})")

env = sample_environment(Uniform(0.55, 0.95), 10, seed=1)
print("environment:", np.round(env.rates, 3))
gap = np.abs(stationary_product(env, 10, 4).p - stationary_solve(env, 10, 4).p).max()
print(f"product formula vs null space: {gap:.1e}")

times = np.linspace(0.5, 30, 12)
for t, d in zip(times, worst_case_tv(env, 10, 4, times)):
    print(f"  t = {t:5.2f}   max_x TV = {d:.4f}")
print(f"t_mix(1/4) = {exact_mixing_time(env, 10, 4):.4f}")

# stationary mass of a particle in the left quarter, and its upper bound
print(f"pi(A) = {exact_pi_A(env, 10, 4):.3e}  <=  bound {pi_A_bound(env, 10, 4):.3e}")
