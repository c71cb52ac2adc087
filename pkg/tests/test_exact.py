import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from sepmix.env import Environment, constant_environment
from sepmix.exact import (
    Distribution,
    censored_distribution_at,
    distribution_at,
    event_A_mask,
    exact_mixing_time,
    exact_pi_A,
    generator_matrix,
    hitting_tail,
    mean_hitting_time,
    pi_A_bound,
    point_mass,
    stationary,
    stationary_product,
    stationary_solve,
    stochastic_dominance,
    transition_matrix,
    tv_distance,
    worst_case_tv,
)
from sepmix.graphical import CensoringScheme, make_box_censoring
from sepmix.statespace import enumerate_states, ground_state, index_of, top_state

from .conftest import random_env


def dense_generator(rates):
    """Independent generator in the colex order, built from subsets."""
    n = len(rates)
    out = {}
    for k in range(1, n):
        states = sorted(itertools.combinations(range(n), k), key=lambda s: s[::-1])
        idx = {s: i for i, s in enumerate(states)}
        Q = np.zeros((len(states), len(states)))
        for s in states:
            occ = set(s)
            for x in range(n - 1):
                if x in occ and x + 1 not in occ:
                    Q[idx[s], idx[tuple(sorted(occ - {x} | {x + 1}))]] += rates[x]
                if x + 1 in occ and x not in occ:
                    Q[idx[s], idx[tuple(sorted(occ - {x + 1} | {x}))]] += 1 - rates[x + 1]
        np.fill_diagonal(Q, -Q.sum(axis=1))
        out[k] = Q
    return out


ENV4 = Environment(np.array([0.6, 0.8, 0.55, 0.9]))
# expm(1.3 Q) row of 1100 from the dense oracle above, frozen
ROW_1100_T13 = [0.43735243, 0.26436026, 0.11630916, 0.11113327, 0.05470614, 0.01613873]


def test_generator_two_sites():
    L = generator_matrix(Environment(np.array([0.7, 0.4])), 2, 1).toarray()
    # states 10, 01
    assert L[0, 1] == pytest.approx(0.7) and L[1, 0] == pytest.approx(0.6)


def test_generator_matches_dense(rng):
    env = random_env(rng, 6)
    Q = dense_generator(env.rates)
    L = generator_matrix(env, 6, 3).toarray()
    assert np.allclose(L, Q[3], atol=1e-14)
    assert np.allclose(L.sum(axis=1), 0, atol=1e-12)


def test_stationary_small_cases():
    p = 0.7
    assert np.allclose(stationary(constant_environment(p, 2), 2, 1).p, [1 - p, p])
    r = p / (1 - p)
    v = np.array([1, r, r * r])
    assert np.allclose(stationary_product(constant_environment(p, 3), 3, 1).p, v / v.sum(), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_detailed_balance(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 8))
    k = int(rng.integers(1, n))
    env = Environment(rng.uniform(0.02, 0.98, n))
    pi = stationary_product(env, n, k).p
    L = generator_matrix(env, n, k).toarray()
    flux = pi[:, None] * L
    np.fill_diagonal(flux, 0)
    assert np.abs(flux - flux.T).max() <= 1e-10


def test_stationary_with_absorbing_edge():
    # a rate 1 site never lets particles step back; the closed class is the ground state
    env = Environment(np.array([1.0, 1.0, 1.0, 1.0]))
    pi = stationary_solve(env, 4, 2)
    assert pi[ground_state(4, 2)] == pytest.approx(1.0)


def test_distribution_matches_expm():
    init = point_mass(top_state(4, 2))
    got = distribution_at(init, ENV4, 1.3).p
    assert np.allclose(got, ROW_1100_T13, atol=1e-8)
    ref = expm(1.3 * dense_generator(ENV4.rates)[2])[0]
    assert np.allclose(got, ref, atol=1e-10)
    assert np.allclose(transition_matrix(ENV4, 4, 2, 1.3)[0], ref, atol=1e-10)


def test_distribution_limits():
    init = point_mass(top_state(4, 2))
    assert np.array_equal(distribution_at(init, ENV4, 0.0).p, init.p)
    far = distribution_at(init, ENV4, 200.0)
    assert tv_distance(far.p, stationary(ENV4, 4, 2).p) <= 1e-6


def test_two_state_closed_form():
    env = constant_environment(0.5, 2)
    for t in (0.1, 0.7, 2.5):
        stay = distribution_at(point_mass("10"), env, t)["10"]
        assert stay == pytest.approx(0.5 + math.exp(-t) / 2, abs=1e-10)
    assert worst_case_tv(env, 2, 1, [1.0])[0] == pytest.approx(math.exp(-1) / 2, abs=1e-10)


def test_tv_examples():
    assert tv_distance([0.5, 0.5], [0.5, 0.5]) == 0
    assert tv_distance([1, 0], [0, 1]) == 1
    assert tv_distance([0.5, 0.5], [0.75, 0.25]) == pytest.approx(0.25)


def test_mixing_time_two_state():
    env = constant_environment(0.5, 2)
    assert exact_mixing_time(env, 2, 1, 0.25) == pytest.approx(math.log(2), abs=1e-6)
    assert exact_mixing_time(env, 2, 1, 0.999) < 1e-2


def test_mixing_time_consistent_with_tv(rng):
    env = random_env(rng, 7)
    t = exact_mixing_time(env, 7, 3, 0.25)
    before, after = worst_case_tv(env, 7, 3, [t * 0.999, t * 1.001])
    assert before > 0.25 >= after


def test_mean_hitting_two_state():
    env = constant_environment(0.75, 2)
    # exponential holding time with rate 3/4
    assert mean_hitting_time(env, "10", "01") == pytest.approx(4 / 3)
    assert hitting_tail(env, "10", "01", 1.0) == pytest.approx(math.exp(-0.75))


def test_censored_trivial_schemes():
    init = point_mass(top_state(4, 2))
    free = censored_distribution_at(init, ENV4, CensoringScheme.empty(4), 1.0)
    assert np.allclose(free.p, distribution_at(init, ENV4, 1.0).p)
    frozen = censored_distribution_at(init, ENV4, CensoringScheme.all_blocked(4), 1.0)
    assert np.allclose(frozen.p, init.p)


def test_dominance_basics():
    p = stationary(ENV4, 4, 2).p
    assert stochastic_dominance(p, p, 4, 2)
    top, bot = point_mass(top_state(4, 2)).p, point_mass(ground_state(4, 2)).p
    assert stochastic_dominance(top, bot, 4, 2)
    assert not stochastic_dominance(bot, top, 4, 2)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_dominance_methods_agree(seed):
    rng = np.random.default_rng(seed)
    n, k = 5, 2
    states = enumerate_states(n, k)
    env = Environment(rng.uniform(0.1, 0.9, n))
    t = float(rng.uniform(0.1, 2.0))
    a = distribution_at(point_mass(states[int(rng.integers(len(states)))]), env, t).p
    b = distribution_at(point_mass(states[int(rng.integers(len(states)))]), env, t).p
    assert stochastic_dominance(a, b, n, k, method="upsets") == stochastic_dominance(a, b, n, k, method="transport")


def test_censoring_dominates_box_scheme():
    env = Environment(np.array([0.7, 0.8, 0.65, 0.9, 0.75]))
    init = point_mass(top_state(5, 2))
    cens = censored_distribution_at(init, env, make_box_censoring(5, 2, 1, 0.5), 1.0)
    assert stochastic_dominance(cens.p, distribution_at(init, env, 1.0).p, 5, 2, method="upsets")


def test_event_A_mask():
    mask = event_A_mask(8, 2)
    states = enumerate_states(8, 2)
    assert np.array_equal(mask, states[:, :2].any(axis=1))


def test_pi_A_bound_constant_env():
    # every factor is 1/3, so the bound is N^2 3^{-(l-j)} at the shortest span l - j = 3
    env = constant_environment(0.75, 12)
    bound = pi_A_bound(env, 12, 4)
    assert bound == pytest.approx(144 / 27)
    assert exact_pi_A(env, 12, 4) <= bound


def test_pi_A_zero_with_full_rate_site():
    rates = np.full(12, 0.7)
    rates[4] = 1.0
    env = Environment(rates)
    assert exact_pi_A(env, 12, 4) == 0.0
    assert pi_A_bound(env, 12, 4) == 0.0


def test_distribution_lookup():
    d = Distribution(np.array([0.25, 0.75]), 2, 1)
    assert d["10"] == 0.25 and d.mass(np.array([False, True])) == 0.75
    with pytest.raises(ValueError):
        Distribution(np.array([0.5, 0.6]), 2, 1)
