"""Coupled evolution from the extreme states and the box censoring scheme.

All chains share the same clocks, so the chain from the top state stays above
the chain from the ground state and they merge for good.  Closing edges
according to the alternating box pattern slows particles down: the censored
law sits above the free one.
"""

import numpy as np

from sepmix.env import Environment, Uniform, sample_environment
from sepmix.estimate import displacement_experiment, mc_mixing_upper
from sepmix.exact import censored_distribution_at, distribution_at, point_mass, stochastic_dominance
from sepmix.graphical import build_event_stream, coalescence_time, coupled_violations, make_box_censoring, trajectory
from sepmix.statespace import ground_state, top_state

env = sample_environment(Uniform(0.6, 0.9), 12, seed=4)
stream = build_event_stream(env.sites, 200.0, seed=4)
print("ordering violations:", coupled_violations([ground_state(12, 6), top_state(12, 6)], [env, env], stream, 200.0, [(0, 1)]))
print("coalescence time:", coalescence_time(env, stream, 200.0, 6))
for t, lit in trajectory(top_state(12, 6), env, stream, 3.0)[:8]:
    print(f"  {t:7.4f}  {lit}")

est = mc_mixing_upper(env, 12, 6, 0.25, 400, seed=5)
print(f"upper bound on t_mix(1/4): {est.value:.2f} +- {est.stderr:.2f}")

small = Environment(np.array([0.7, 0.8, 0.65, 0.9, 0.75]))
scheme = make_box_censoring(5, 2, 1, 0.5)
init = point_mass(top_state(5, 2))
for t in (0.5, 1.0, 2.0):
    ok = stochastic_dominance(censored_distribution_at(init, small, scheme, t), distribution_at(init, small, t))
    print(f"censored law dominates at t={t}: {ok}")

n, k = 32, 16
big = sample_environment(Uniform(0.6, 0.9), n, seed=6)
grid = np.linspace(0, 60, 7)
free = displacement_experiment(big, n, k, None, 60.0, 500, seed=7, grid=grid)
cens = displacement_experiment(big, n, k, make_box_censoring(n, k, 2, 2.0), 60.0, 500, seed=8, grid=grid)
print("mean leftmost position, free vs censored:")
for t, a, b in zip(grid, free.mean, cens.mean):
    print(f"  t={t:4.0f}  {a:6.2f}  {b:6.2f}")
