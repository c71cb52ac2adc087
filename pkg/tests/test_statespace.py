from fractions import Fraction
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sepmix.statespace import (
    StateSpaceTooLarge,
    as_config,
    enumerate_states,
    ground_state,
    height,
    in_event_A,
    index_of,
    leftmost_particle,
    leq,
    leq_matrix,
    n_states,
    rightmost_empty,
    to_literal,
    top_state,
)


def test_extreme_states():
    assert to_literal(ground_state(4, 2)) == "0011"
    assert to_literal(top_state(4, 2)) == "1100"
    assert to_literal(ground_state(5, 1)) == "00001"


def test_ground_below_top_exhaustive():
    for n in range(2, 9):
        for k in range(1, n):
            assert leq(ground_state(n, k), top_state(n, k))


def test_leq_rejects_mismatched():
    with pytest.raises(ValueError):
        leq("0011", "0111")


def test_landmarks():
    assert leftmost_particle("0011") == 3 and rightmost_empty("0011") == 2
    for n, k in [(5, 2), (8, 3)]:
        assert leftmost_particle(top_state(n, k)) == 1
        assert rightmost_empty(top_state(n, k)) == n
        assert leftmost_particle(ground_state(n, k)) == n - k + 1
        assert rightmost_empty(ground_state(n, k)) == n - k


def test_event_A():
    assert in_event_A(top_state(8, 2))
    assert not in_event_A(ground_state(8, 2))
    assert in_event_A("01000000")
    assert not in_event_A("00100000")


def test_height_values():
    h = Fraction(1, 2)
    assert height(top_state(4, 2)) == (h, Fraction(1), h)
    assert height(ground_state(4, 2)) == (-h, Fraction(-1), -h)


@settings(max_examples=50)
@given(st.integers(3, 9).flatmap(lambda n: st.tuples(st.just(n), st.integers(1, n - 1))), st.randoms())
def test_height_injective_and_monotone(nk, rnd):
    n, k = nk
    states = enumerate_states(n, k)
    i, j = rnd.randrange(len(states)), rnd.randrange(len(states))
    a, b = states[i], states[j]
    assert (height(a) == height(b)) == (i == j)
    # the order is the pointwise order of height functions
    assert leq(a, b) == all(x <= y for x, y in zip(height(a), height(b)))


def test_enumeration_small():
    assert [to_literal(r) for r in enumerate_states(3, 1)] == ["100", "010", "001"]
    assert len(enumerate_states(4, 2)) == 6 == n_states(4, 2)


def test_index_round_trip():
    states = enumerate_states(8, 4)
    assert np.array_equal(index_of(states), np.arange(comb(8, 4)))
    assert all(index_of(s) == i for i, s in enumerate(states[:10]))


def test_enumeration_cap():
    with pytest.raises(StateSpaceTooLarge):
        enumerate_states(30, 15)


def test_bad_inputs():
    with pytest.raises(ValueError):
        top_state(4, 4)
    with pytest.raises(ValueError):
        as_config("01a1")
    with pytest.raises(ValueError):
        as_config([0, 2, 1])


def test_leq_matrix_matches_pairwise():
    states = enumerate_states(5, 2)
    m = leq_matrix(states)
    for i, a in enumerate(states):
        for j, b in enumerate(states):
            assert m[i, j] == leq(a, b)
    # top is the maximum, ground the minimum
    assert m[:, index_of(top_state(5, 2))].all()
    assert m[index_of(ground_state(5, 2)), :].all()
