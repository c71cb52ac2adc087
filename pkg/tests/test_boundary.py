import math

import numpy as np
import pytest

from sepmix.boundary import (
    BoundaryChainSpec,
    blythe_decay_check,
    boundary_stationary,
    exact_boundary_profile,
    find_low_drift_interval,
    flatten_environment,
    linear_profile,
    mc_boundary_profile,
    modified_initial_configuration,
    sample_stationary_box,
    simulate_boundary,
    simulate_modified_process,
    tilted_bound,
)
from sepmix.env import Environment, TwoPoint, constant_environment, sample_environment


def test_linear_profile_small():
    assert np.allclose(exact_boundary_profile(BoundaryChainSpec(2)), [0.75, 0.25], atol=1e-12)
    assert np.allclose(exact_boundary_profile(BoundaryChainSpec(3)), [5 / 6, 1 / 2, 1 / 6], atol=1e-12)


@pytest.mark.parametrize("M", range(2, 11))
def test_profile_harmonic_extension(M):
    rho = exact_boundary_profile(BoundaryChainSpec(M))
    ext = np.concatenate(([2 - rho[0]], rho, [-rho[-1]]))
    assert np.abs(ext[:-2] - 2 * ext[1:-1] + ext[2:]).max() <= 1e-10
    assert np.allclose(rho, linear_profile(M), atol=1e-10)


def test_stationary_is_distribution():
    pi = boundary_stationary(BoundaryChainSpec(6, 0.1))
    assert pi.min() >= -1e-14 and pi.sum() == pytest.approx(1.0)


def test_tilted_bound_example():
    assert tilted_bound(4, 0.05) == pytest.approx(0.8)
    assert exact_boundary_profile(BoundaryChainSpec(4, 0.05))[-1] <= 0.8


def test_blythe_prediction_and_monotonicity():
    fit = blythe_decay_check(0.25)
    assert fit.predicted_slope == pytest.approx(-math.log(3) / 2)
    slopes = [blythe_decay_check(g, range(6, 11)).slope for g in (0.1, 0.2, 0.3)]
    assert slopes[0] > slopes[1] > slopes[2]
    assert abs(blythe_decay_check(1e-4, range(6, 11)).slope) < abs(slopes[0])


def test_spec_validation():
    with pytest.raises(ValueError):
        BoundaryChainSpec(1)
    with pytest.raises(ValueError):
        BoundaryChainSpec(4, 0.5)


def test_no_annihilation_before_a_crossing():
    run = simulate_boundary(BoundaryChainSpec(6), np.zeros(6, np.uint8), 0.5, seed=1)
    assert run.annihilations == 0


def test_simulation_deterministic_and_counts_monotone():
    spec = BoundaryChainSpec(5)
    a = simulate_boundary(spec, "10100", 50.0, seed=3, sample_times=np.linspace(0, 50, 11))
    b = simulate_boundary(spec, "10100", 50.0, seed=3, sample_times=np.linspace(0, 50, 11))
    assert np.array_equal(a.sigma, b.sigma) and a.annihilations == b.annihilations
    assert np.all(np.diff(a.counts_at) >= 0) and a.counts_at[-1] <= a.annihilations


def test_sample_stationary_box_law():
    spec = BoundaryChainSpec(4)
    draws = sample_stationary_box(spec, np.random.default_rng(0), 40_000)
    se = np.sqrt(0.25 / 40_000)
    assert np.all(np.abs(draws.mean(axis=0) - linear_profile(4)) <= 4 * se)


def test_mc_profile_small():
    spec = BoundaryChainSpec(4)
    dens, se = mc_boundary_profile(spec, 20_000, seed=2)
    assert np.all(np.abs(dens - linear_profile(4)) <= 4 * se)


def test_find_interval():
    n, M = 64, 3
    assert find_low_drift_interval(constant_environment(0.4, n), M, 0.5) == (8, 10)
    assert find_low_drift_interval(constant_environment(0.4, n), M, 0.0) == (8, 10)
    assert find_low_drift_interval(constant_environment(0.9, n), M, 0.0) is None
    with pytest.raises(ValueError):
        find_low_drift_interval(constant_environment(0.4, 16), 3)


def test_interval_frequency_grows_with_N():
    law = TwoPoint(0.5, 1.0, 0.5)
    freq = []
    for n in (64, 256):
        M = max(2, int(math.log2(n) / 2))
        hits = sum(find_low_drift_interval(sample_environment(law, n, [n, s]), M) is not None for s in range(1000))
        freq.append(hits / 1000)
    assert freq[1] > freq[0]


def test_flatten():
    env = Environment(np.array([0.3, 0.5, 0.6, 0.9]))
    assert np.array_equal(flatten_environment(env).rates, [0.5, 0.5, 1.0, 1.0])
    assert np.allclose(flatten_environment(env, 0.1).rates, [0.6, 0.6, 0.6, 1.0])


def _barrier_env(n=64):
    rates = np.full(n, 0.9)
    rates[7:11] = 0.5
    return Environment(rates)


def test_modified_tau_zero_without_left_particles():
    env = _barrier_env()
    eta = np.zeros(64, np.uint8)
    eta[40:56] = 1
    run = simulate_modified_process(eta, env, (8, 11), 10.0, seed=0)
    assert run.tau_star == 0.0


def test_modified_coupling_pathwise():
    env = _barrier_env()
    for seed in range(30):
        eta = modified_initial_configuration(64, 32, (8, 11), 0.0, seed)
        assert eta.sum() == 32
        run = simulate_modified_process(eta, env, (8, 11), 200.0, seed, sample_times=np.linspace(0, 200, 21))
        assert run.mismatches == 0
        assert run.crossings <= run.annihilations
        assert run.final.sum() == 32
        assert np.all(np.diff(run.leftmost) >= 0) or run.tau_star < 200


def test_modified_invalid_interval():
    with pytest.raises(ValueError):
        simulate_modified_process(np.zeros(64, np.uint8), _barrier_env(), (11, 8), 1.0, seed=0)
