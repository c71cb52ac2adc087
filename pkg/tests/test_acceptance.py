"""End-to-end acceptance checks, one test per criterion.

Each test prints a ``criterion n: PASS/FAIL`` line; the lines are repeated
in the terminal summary.
"""

import math
import time

import numpy as np
import pytest
from scipy.stats import chi2_contingency

from sepmix import _kernels as K
from sepmix.boundary import (
    BoundaryChainSpec,
    annihilation_rate,
    blythe_decay_check,
    exact_boundary_profile,
    linear_profile,
    mc_boundary_profile,
    tilted_bound,
)
from sepmix.env import Environment, TwoPoint, Uniform, constant_environment
from sepmix.estimate import certify_lower_bound, scaling_experiment
from sepmix.exact import (
    censored_distribution_at,
    distribution_at,
    exact_mixing_time,
    exact_pi_A,
    pi_A_bound,
    point_mass,
    stationary_product,
    stationary_solve,
    stochastic_dominance,
)
from sepmix.graphical import make_box_censoring, project_2to1, replica_keys
from sepmix.statespace import enumerate_states, index_of, top_state

from .conftest import random_env

pytestmark = pytest.mark.acceptance


def test_stationary_product_matches_nullspace(report, rng):
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 9))
        k = int(rng.integers(1, min(4, n - 1) + 1))
        env = random_env(rng, n)
        worst = max(worst, float(np.abs(stationary_product(env, n, k).p - stationary_solve(env, n, k).p).max()))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-10 and dt < 10
    report(1, ok, f"max|product - solve| = {worst:.2e}, {dt:.1f}s")
    assert ok


def test_boundary_profile(report):
    t0 = time.perf_counter()
    exact_err = max(
        float(np.abs(exact_boundary_profile(BoundaryChainSpec(m, 0.0)) - linear_profile(m)).max()) for m in range(2, 11)
    )
    dens, se = mc_boundary_profile(BoundaryChainSpec(10, 0.0), 100_000, seed=7)
    z = np.abs(dens - linear_profile(10)) / se
    dt = time.perf_counter() - t0
    ok = exact_err <= 1e-10 and bool(np.all(z <= 3)) and dt < 60
    report(2, ok, f"exact err {exact_err:.1e}, MC max z = {z.max():.2f}, {dt:.1f}s")
    assert ok


def test_annihilation_rate(report):
    t0 = time.perf_counter()
    rate, se = annihilation_rate(BoundaryChainSpec(5, 0.0), 1e4, 20, seed=11)
    dt = time.perf_counter() - t0
    ok = abs(rate - 0.1) <= 0.005 and dt < 30
    report(3, ok, f"Z/t = {rate:.5f} +- {se:.5f} (target 0.1 +- 0.005), {dt:.1f}s")
    assert ok


def test_tilted_box_bound(report):
    t0 = time.perf_counter()
    slack = min(
        tilted_bound(m, c) - float(exact_boundary_profile(BoundaryChainSpec(m, c))[-1])
        for m in range(2, 13)
        for c in (0.01, 0.05, 0.1)
    )
    dt = time.perf_counter() - t0
    ok = slack >= 0 and dt < 60
    report(4, ok, f"min slack {slack:.4f}, {dt:.1f}s")
    assert ok


def test_blythe_decay(report):
    t0 = time.perf_counter()
    fit = blythe_decay_check(0.25, range(6, 13))
    dt = time.perf_counter() - t0
    target = -math.log(3) / 2
    ok = abs(fit.slope - target) <= 0.1 and dt < 120
    report(5, ok, f"slope {fit.slope:.4f} vs {target:.4f}, {dt:.1f}s")
    assert ok


def test_monotone_coupling(report, rng):
    t0 = time.perf_counter()
    violations = trajectories = 0
    for e in range(100):
        n = int(rng.integers(2, 11))
        k = int(rng.integers(1, n))
        env = random_env(rng, n)
        rates = np.ascontiguousarray(env.rates)
        keys = replica_keys([3, e], 100)
        violations += K.coupled_extremes_violations(keys, rates, rates, k, 4.0 * n)
        trajectories += keys.size
    dt = time.perf_counter() - t0
    ok = violations == 0 and trajectories >= 10_000 and dt < 120
    report(6, ok, f"{violations} violations over {trajectories} coupled pairs, {dt:.1f}s")
    assert ok


def test_censoring_dominance(report):
    t0 = time.perf_counter()
    env = Environment(np.array([0.7, 0.8, 0.65, 0.9, 0.75]))
    scheme = make_box_censoring(5, 2, 1, 0.5)
    init = point_mass(top_state(5, 2))
    held = []
    for t in (0.5, 1.0, 2.0):
        cens = censored_distribution_at(init, env, scheme, t)
        free = distribution_at(init, env, t)
        held.append(stochastic_dominance(cens.p, free.p, 5, 2, method="upsets"))
    dt = time.perf_counter() - t0
    ok = all(held) and dt < 60
    report(7, ok, f"dominance at t=0.5,1,2: {held}, {dt:.1f}s")
    assert ok


def test_two_state_mixing(report):
    t = exact_mixing_time(constant_environment(0.5, 2), 2, 1, 0.25)
    ok = abs(t - math.log(2)) <= 1e-6
    report(8, ok, f"t_mix = {t:.9f}, ln 2 = {math.log(2):.9f}")
    assert ok


def test_event_A_machinery(report, rng):
    t0 = time.perf_counter()
    bound_fail = contradictions = certified = 0
    for e in range(100):
        env = random_env(rng, 12)
        if exact_pi_A(env, 12, 4) > pi_A_bound(env, 12, 4) + 1e-12:
            bound_fail += 1
        tmix = exact_mixing_time(env, 12, 4, 0.25)
        for frac in (0.25, 0.5, 1.0, 1.5):
            cert = certify_lower_bound(env, 12, 4, frac * tmix, 2000, [9, e, int(4 * frac)])
            certified += cert.certified
            contradictions += cert.certified and not tmix > cert.t
    dt = time.perf_counter() - t0
    ok = bound_fail == 0 and contradictions == 0
    report(9, ok, f"bound failures {bound_fail}, contradictions {contradictions} ({certified} certified), {dt:.1f}s")
    assert ok


def test_scaling_trends(report):
    t0 = time.perf_counter()
    grid = (32, 64, 128, 256)
    non = scaling_experiment(Uniform(0.6, 0.9), grid, eps=0.25, replicas=200, seed=7)
    plain = scaling_experiment(TwoPoint(0.25, 1.0, 0.3), grid, eps=0.25, replicas=200, seed=7)
    marg = scaling_experiment(TwoPoint(0.5, 1.0, 0.5), grid, eps=0.25, replicas=200, seed=7)
    per_n = np.array(marg.medians) / np.array(grid)
    dt = time.perf_counter() - t0
    checks = (0.85 <= non.slope <= 1.2, plain.slope >= 1.15, bool(np.all(np.diff(per_n) > 0)), dt < 1800)
    ok = all(checks)
    report(
        10, ok,
        f"non-nestling slope {non.slope:.3f}, plain slope {plain.slope:.3f}, "
        f"marginal t/N {np.round(per_n, 3).tolist()}, {dt:.0f}s",
    )
    assert ok


def test_graphical_matches_exact(report):
    t0 = time.perf_counter()
    n, k, reps = 6, 3, 100_000
    states = enumerate_states(n, k)
    eta0 = top_state(n, k)
    worst = 0.0
    for e, env in enumerate(
        (
            Environment(np.array([0.6, 0.75, 0.9, 0.55, 0.8, 0.7])),
            constant_environment(0.5, n),
            Environment(np.array([0.95, 0.3, 0.85, 0.6, 0.99, 0.5])),
        )
    ):
        keys = replica_keys([21, e], reps)
        finals = K.evolve_batch(
            keys, 1, eta0, np.ascontiguousarray(env.rates), 1.0, np.zeros((0, 0), np.bool_), np.zeros(1)
        )
        emp = np.bincount(index_of(finals), minlength=len(states)) / reps
        worst = max(worst, 0.5 * float(np.abs(emp - distribution_at(point_mass(eta0), env, 1.0).p).sum()))
    dt = time.perf_counter() - t0
    ok = worst <= 0.01 and dt < 120
    report(11, ok, f"max TV {worst:.4f}, {dt:.1f}s")
    assert ok


def test_second_class_projection(report):
    t0 = time.perf_counter()
    reps = 100_000
    env = Environment(np.array([0.7, 0.6, 0.85, 0.5, 0.9, 0.65, 0.8, 0.75]))
    rates = np.ascontiguousarray(env.rates)
    xi0 = np.array([1, 2, 1, 0, 2, 0, 0, 0], dtype=np.uint8)
    eta0 = project_2to1(xi0)
    xi = K.second_class_batch(replica_keys([31, 1], reps), 1, xi0, rates, 1.0)[0]
    direct = K.evolve_batch(replica_keys([31, 2], reps), 1, eta0, rates, 1.0, np.zeros((0, 0), np.bool_), np.zeros(1))
    a = np.bincount(index_of(project_2to1(xi)), minlength=70)
    b = np.bincount(index_of(direct), minlength=70)
    keep = (a + b) > 0
    _, pval, dof, _ = chi2_contingency(np.vstack([a[keep], b[keep]]))
    dt = time.perf_counter() - t0
    ok = pval > 0.01
    report(12, ok, f"chi-square p = {pval:.3f} on {dof} dof, {dt:.1f}s")
    assert ok
