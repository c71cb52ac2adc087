"""Configurations of the exclusion process and the order they carry.

A configuration is a 0/1 numpy array; site ``x`` of a segment ``[N]`` lives
at index ``x - 1``.  Configurations print as literals such as ``"0011"``.

The partial order compares prefix sums: ``eta <= zeta`` iff every prefix of
``eta`` holds at most as many particles as the same prefix of ``zeta``.  The
top state packs all particles to the left, the ground state to the right.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from math import comb

import numpy as np

DEFAULT_STATE_CAP = 20_000


class StateSpaceTooLarge(ValueError):
    pass


def as_config(eta) -> np.ndarray:
    """Coerce a literal, sequence or array into a 0/1 ``uint8`` array."""
    if isinstance(eta, str):
        if not eta or set(eta) - {"0", "1"}:
            raise ValueError(f"bad configuration literal {eta!r}")
        return np.frombuffer(eta.encode(), dtype=np.uint8) - ord("0")
    arr = np.asarray(eta)
    if arr.ndim != 1 or (arr.size and (arr.min() < 0 or arr.max() > 1)):
        raise ValueError("configuration must be a 1-d 0/1 vector")
    return arr.astype(np.uint8)


def to_literal(eta) -> str:
    return "".join("1" if v else "0" for v in np.asarray(eta))


def _check_nk(n, k):
    if not 1 <= k <= n - 1:
        raise ValueError(f"need 1 <= k <= N-1, got N={n}, k={k}")


def ground_state(n: int, k: int) -> np.ndarray:
    """All ``k`` particles packed against the right end."""
    _check_nk(n, k)
    eta = np.zeros(n, dtype=np.uint8)
    eta[n - k :] = 1
    return eta


def top_state(n: int, k: int) -> np.ndarray:
    """All ``k`` particles packed against the left end."""
    _check_nk(n, k)
    eta = np.zeros(n, dtype=np.uint8)
    eta[:k] = 1
    return eta


def leq(eta, zeta) -> bool:
    eta, zeta = as_config(eta), as_config(zeta)
    if eta.size != zeta.size or eta.sum() != zeta.sum():
        raise ValueError("configurations live on different state spaces")
    return bool(np.all(np.cumsum(eta) <= np.cumsum(zeta)))


def leftmost_particle(eta, offset: int = 1) -> int:
    occupied = np.flatnonzero(as_config(eta))
    if occupied.size == 0:
        raise ValueError("empty configuration has no particle")
    return int(occupied[0]) + offset


def rightmost_empty(eta, offset: int = 1) -> int:
    vacant = np.flatnonzero(as_config(eta) == 0)
    if vacant.size == 0:
        raise ValueError("full configuration has no empty site")
    return int(vacant[-1]) + offset


def in_event_A(eta) -> bool:
    """Some site ``x <= floor(N/4)`` is occupied."""
    eta = as_config(eta)
    return bool(eta[: eta.size // 4].any())


def height(eta) -> tuple[Fraction, ...]:
    """Height profile ``H(x) = #particles in [1, x] - x k / N`` for ``x < N``."""
    eta = as_config(eta)
    n, k = eta.size, int(eta.sum())
    prefix = np.cumsum(eta)
    return tuple(Fraction(int(prefix[x - 1])) - Fraction(x * k, n) for x in range(1, n))


# --------------------------------------------------------------------------
# enumeration (colexicographic on particle positions)
# --------------------------------------------------------------------------


def n_states(n: int, k: int) -> int:
    return comb(n, k)


def enumerate_states(n: int, k: int, cap: int = DEFAULT_STATE_CAP) -> np.ndarray:
    """All of ``Omega_{N,k}`` as rows of a ``(C(N,k), N)`` array.

    Rows are in colexicographic order of the occupied positions, so row
    ``i`` is the configuration with ``index_of(row) == i``.
    """
    _check_nk(n, k)
    size = comb(n, k)
    if size > cap:
        raise StateSpaceTooLarge(f"C({n},{k}) = {size} exceeds cap {cap}")
    # colex order on k-subsets = lex order on reversed subsets read right to left
    subsets = sorted(itertools.combinations(range(n), k), key=lambda s: s[::-1])
    states = np.zeros((size, n), dtype=np.uint8)
    rows = np.repeat(np.arange(size), k)
    states[rows, np.asarray(subsets, dtype=np.intp).ravel()] = 1
    return states


def _binomial_table(n: int) -> np.ndarray:
    table = np.zeros((n + 1, n + 2), dtype=np.int64)
    for a in range(n + 1):
        for b in range(a + 1):
            table[a, b] = comb(a, b)
    return table


def index_of(configs) -> np.ndarray | int:
    """Colex rank of one configuration or of every row of a 2-d array."""
    arr = np.asarray(configs if not isinstance(configs, str) else as_config(configs))
    single = arr.ndim == 1
    arr = np.atleast_2d(arr).astype(np.int64)
    n = arr.shape[1]
    table = _binomial_table(n)
    # the particle at 0-based position p that is the i-th from the left
    # contributes C(p, i)
    rank_in_prefix = np.cumsum(arr, axis=1)
    contrib = table[np.arange(n)[None, :], rank_in_prefix] * arr
    ranks = contrib.sum(axis=1)
    return int(ranks[0]) if single else ranks


def leq_matrix(states: np.ndarray) -> np.ndarray:
    """Boolean matrix ``M[i, j] = states[i] <= states[j]``."""
    prefix = np.cumsum(states, axis=1, dtype=np.int32)
    return np.all(prefix[:, None, :] <= prefix[None, :, :], axis=2)
