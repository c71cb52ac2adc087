"""Seeded graphical construction of the exclusion process.

Every site carries a rate-2 Poisson clock.  At a ring the site flips a fair
coin and draws a uniform mark ``u``:

* HEAD, not the last site: the particle moves right if ``u <= omega(x)``;
* TAIL, not the first site: the particle moves left if ``u > omega(x)``.

A move needs an occupied origin and an empty target.  All chains driven by
one stream, whatever their start or environment, use the same rings, which
is what makes the monotone coupling and the censoring comparisons exact.

Streams are identified by a 64-bit key.  Integer seeds are turned into keys
with :func:`stream_key`; :func:`replica_keys` splits one seed into many.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels as K
from .env import Environment
from .statespace import as_config, ground_state, to_literal, top_state

MAX_EVENTS = 10**8


class StreamExhausted(ValueError):
    """Evolution was asked to run past the horizon of a materialized stream."""


def stream_key(seed) -> np.uint64:
    """64-bit stream key for an integer seed (or a sequence of integers)."""
    return np.random.SeedSequence(seed).generate_state(1, np.uint64)[0]


def replica_keys(seed, replicas: int) -> np.ndarray:
    """``replicas`` independent stream keys derived from one seed."""
    if replicas < 1:
        raise ValueError("need at least one replica")
    return np.random.SeedSequence(seed).generate_state(replicas, np.uint64)


# --------------------------------------------------------------------------
# event streams
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EventStream:
    """All rings of sites ``first_site .. first_site + n_sites - 1`` up to
    ``horizon``, merged in time order.

    ``sites`` holds site labels (not indices).  The rings of a site depend
    only on ``(key, site)``, so two streams with the same seed agree on the
    sites they share, and a longer horizon only appends rings.
    """

    seed: object
    horizon: float
    first_site: int
    n_sites: int
    times: np.ndarray = field(repr=False)
    sites: np.ndarray = field(repr=False)
    heads: np.ndarray = field(repr=False)
    marks: np.ndarray = field(repr=False)

    @property
    def key(self) -> np.uint64:
        return stream_key(self.seed)

    @property
    def site_range(self) -> range:
        return range(self.first_site, self.first_site + self.n_sites)

    def __len__(self):
        return self.times.size

    def per_site(self, site: int):
        """Rings of one site as ``(times, heads, marks)``."""
        sel = self.sites == site
        return self.times[sel], self.heads[sel], self.marks[sel]

    def _indices_for(self, env: Environment) -> np.ndarray:
        if env.offset < self.first_site or env.offset + len(env) > self.first_site + self.n_sites:
            raise ValueError(f"stream sites {self.site_range} do not cover {env.sites}")
        return self.sites - env.offset

    def _check_time(self, t):
        if t < 0:
            raise ValueError("time must be non-negative")
        if t > self.horizon:
            raise StreamExhausted(f"t={t} beyond stream horizon {self.horizon}")


def build_event_stream(sites, horizon: float, seed) -> EventStream:
    """Materialize the rings of ``sites`` (a range, or ``(first, last)``)."""
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    if isinstance(sites, range):
        if sites.step != 1 or len(sites) == 0:
            raise ValueError("sites must be a contiguous non-empty range")
        first, n = sites.start, len(sites)
    else:
        first, last = sites
        first, n = int(first), int(last) - int(first) + 1
        if n < 1:
            raise ValueError("empty site range")
    times, idx, heads, marks = K.stream_events(stream_key(seed), first, n, float(horizon))
    for a in (times, idx, heads, marks):
        a.setflags(write=False)
    labels = idx + first
    labels.setflags(write=False)
    return EventStream(seed, float(horizon), first, n, times, labels, heads, marks)


# --------------------------------------------------------------------------
# censoring schemes
# --------------------------------------------------------------------------

_NO_BLOCK = np.zeros((0, 0), dtype=np.bool_)
_NO_BPS = np.zeros(1, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class CensoringScheme:
    """Piecewise constant set of blocked edges.

    Interval ``i`` is ``[breakpoints[i], breakpoints[i+1])``; the last interval
    extends to infinity.  Row ``i`` of ``blocked`` flags the edges
    ``{x, x+1}`` (column ``x - 1``) that are closed during interval ``i``.
    """

    breakpoints: np.ndarray
    blocked: np.ndarray

    def __post_init__(self):
        bps = np.asarray(self.breakpoints, dtype=float)
        blk = np.asarray(self.blocked, dtype=np.bool_)
        if blk.ndim != 2 or bps.ndim != 1 or bps.size != blk.shape[0]:
            raise ValueError("need one blocked row per breakpoint")
        if bps.size == 0 or bps[0] != 0 or np.any(np.diff(bps) <= 0):
            raise ValueError("breakpoints must start at 0 and increase strictly")
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "blocked", blk)

    @property
    def n_sites(self) -> int:
        return self.blocked.shape[1] + 1

    @classmethod
    def empty(cls, n_sites: int) -> CensoringScheme:
        return cls(np.zeros(1), np.zeros((1, n_sites - 1), dtype=bool))

    @classmethod
    def all_blocked(cls, n_sites: int) -> CensoringScheme:
        return cls(np.zeros(1), np.ones((1, n_sites - 1), dtype=bool))

    @classmethod
    def from_edges(cls, n_sites: int, breakpoints, edge_sets) -> CensoringScheme:
        """Build from a list of blocked left endpoints ``x`` per interval."""
        blocked = np.zeros((len(edge_sets), n_sites - 1), dtype=bool)
        for row, edges in zip(blocked, edge_sets):
            for x in edges:
                if not 1 <= x <= n_sites - 1:
                    raise ValueError(f"edge {{{x}, {x + 1}}} outside [1, {n_sites}]")
                row[x - 1] = True
        return cls(np.asarray(breakpoints, dtype=float), blocked)

    def interval_at(self, t: float) -> int:
        return int(np.searchsorted(self.breakpoints, t, side="right") - 1)

    def blocked_at(self, t: float) -> frozenset[int]:
        """Left endpoints of the edges closed at time ``t``."""
        return frozenset(int(x) + 1 for x in np.flatnonzero(self.blocked[self.interval_at(t)]))

    def pieces(self, t_end: float):
        """``(start, stop, blocked_row)`` for the intervals meeting ``[0, t_end]``."""
        out = []
        bps = self.breakpoints
        for i, start in enumerate(bps):
            if start > t_end:
                break
            stop = min(bps[i + 1], t_end) if i + 1 < bps.size else t_end
            if stop > start or (start == t_end == 0):
                out.append((float(start), float(stop), self.blocked[i]))
        return out

    def kernel_args(self):
        # the kernels treat an empty array as "no censoring"
        bps = np.append(self.breakpoints, np.inf)
        return np.ascontiguousarray(self.blocked), bps


def make_box_censoring(n_sites: int, k: int, U: int, S: float, horizon: float | None = None):
    """Alternating box partition with a staggered release of the particles.

    On ``[iS, (i+1)S)`` the edges ``{x, x+1}`` are closed for ``x = 2jU``
    (``i`` even) or ``x = (2j+1)U`` (``i`` odd), ``j >= 1``, ``x <= n_sites - 2U``.
    While ``i < 2k`` the lowest closed edge at or above ``k - i//2`` is traded
    for ``{k - i//2 - 1, k - i//2}``, which holds back all but the rightmost
    ``i//2 + 1`` particles of the top state.  The pattern is laid out up to
    ``horizon`` (default ``(2k + 2) S``); the last interval then persists.
    """
    U, k = int(U), int(k)
    if U < 1 or not S > 0:
        raise ValueError("box half-width U and period S must be positive")
    if not 1 <= k <= n_sites - 1:
        raise ValueError("need 1 <= k <= n_sites - 1")
    if horizon is None:
        horizon = (2 * k + 2) * S
    n_int = max(1, int(np.ceil(horizon / S)))
    edge_sets = []
    for i in range(n_int):
        start = 2 * U if i % 2 == 0 else 3 * U
        edges = sorted(range(start, n_sites - 2 * U + 1, 2 * U))
        if i < 2 * k:
            target = k - i // 2
            above = [x for x in edges if x >= target]
            if above:
                edges.remove(above[0])
            if target - 1 >= 1 and target - 1 not in edges:
                edges.append(target - 1)
        edge_sets.append(sorted(edges))
    return CensoringScheme.from_edges(n_sites, np.arange(n_int) * float(S), edge_sets)


# --------------------------------------------------------------------------
# evolution
# --------------------------------------------------------------------------


def _check_config(eta0, env: Environment) -> np.ndarray:
    eta = as_config(eta0).copy()
    if eta.size != len(env):
        raise ValueError(f"configuration has {eta.size} sites, environment {len(env)}")
    return eta


def evolve(eta0, env: Environment, stream: EventStream, t: float) -> np.ndarray:
    """Configuration at time ``t`` started from ``eta0``."""
    return evolve_censored(eta0, env, stream, None, t)


def evolve_censored(eta0, env: Environment, stream: EventStream, scheme, t: float) -> np.ndarray:
    """As :func:`evolve`, skipping rings whose edge is closed at their time.

    A HEAD ring at ``x`` uses edge ``{x, x+1}``; a TAIL ring uses ``{x-1, x}``.
    """
    stream._check_time(t)
    eta = _check_config(eta0, env)
    idx = stream._indices_for(env)
    if scheme is None:
        blocked, bps = _NO_BLOCK, _NO_BPS
    else:
        if scheme.n_sites != len(env):
            raise ValueError("scheme and environment sizes differ")
        blocked, bps = scheme.kernel_args()
    rates = np.ascontiguousarray(env.rates)
    return K.evolve_events(eta, rates, stream.times, idx, stream.heads, stream.marks, float(t), blocked, bps)


def evolve_coupled(starts: Sequence, envs: Sequence[Environment], stream: EventStream, t: float):
    """Evolve several chains on one stream; returns their configurations."""
    finals, _ = _coupled(starts, envs, stream, t, np.zeros((0, 2), dtype=np.int64))
    return finals


def coupled_violations(starts, envs, stream: EventStream, t: float, pairs) -> int:
    """Number of ring times at which some ``(lo, hi)`` in ``pairs`` has
    ``chain[lo] <= chain[hi]`` broken."""
    return _coupled(starts, envs, stream, t, np.asarray(pairs, dtype=np.int64).reshape(-1, 2))[1]


def _coupled(starts, envs, stream, t, pairs):
    if len(starts) != len(envs) or not starts:
        raise ValueError("need one environment per start")
    stream._check_time(t)
    first = envs[0]
    for e in envs:
        if e.offset != first.offset or len(e) != len(first):
            raise ValueError("coupled chains must share a site range")
    etas = np.stack([_check_config(s, e) for s, e in zip(starts, envs)])
    rates = np.stack([e.rates for e in envs])
    idx = stream._indices_for(first)
    bad = K.coupled_events(etas, rates, stream.times, idx, stream.heads, stream.marks, float(t), pairs)
    return [row.copy() for row in etas], int(bad)


def coalescence_time(env: Environment, stream, horizon: float, k: int) -> float | None:
    """First ring at which the chains from the top and ground states agree.

    ``stream`` is an :class:`EventStream` or a key.  Returns ``None`` when
    they are still apart at ``horizon``.
    """
    key = stream.key if isinstance(stream, EventStream) else np.uint64(stream)
    if isinstance(stream, EventStream):
        stream._check_time(horizon)
        stream._indices_for(env)
    top_state(len(env), k)  # validates k
    t, _ = K.coalescence_time(key, env.offset, np.ascontiguousarray(env.rates), int(k), float(horizon), MAX_EVENTS)
    return None if np.isinf(t) else float(t)


def hitting_time_ground(eta0, env: Environment, stream, horizon: float) -> float | None:
    """First ring at which the chain from ``eta0`` sits in the ground state."""
    eta = _check_config(eta0, env)
    key = stream.key if isinstance(stream, EventStream) else np.uint64(stream)
    if isinstance(stream, EventStream):
        stream._check_time(horizon)
        stream._indices_for(env)
    target = ground_state(eta.size, int(eta.sum()))
    t, _, _ = K.hitting_time(
        key, env.offset, np.ascontiguousarray(env.rates), eta, target, float(horizon), MAX_EVENTS
    )
    return None if np.isinf(t) else float(t)


def trajectory(eta0, env: Environment, stream: EventStream, t: float):
    """Every change of the configuration up to ``t`` as ``(time, literal)``.

    The first row is the start at time 0.  Meant for dumps of small systems.
    """
    stream._check_time(t)
    eta = _check_config(eta0, env)
    idx = stream._indices_for(env)
    rates = env.rates
    rows = [(0.0, to_literal(eta))]
    n = eta.size
    for time, i, head, mark in zip(stream.times, idx, stream.heads, stream.marks):
        if time > t:
            break
        if not 0 <= i < n:
            continue
        j = i + 1 if head else i - 1
        if not 0 <= j < n or eta[i] == 0 or eta[j] == 1:
            continue
        if (mark <= rates[i]) if head else (mark > rates[i]):
            eta[i], eta[j] = 0, 1
            rows.append((float(time), to_literal(eta)))
    return rows


def write_trajectory_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "configuration"])
        for time, lit in rows:
            w.writerow([repr(time), lit])


# --------------------------------------------------------------------------
# second class particles
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ThreeSpeciesConfiguration:
    """Values in {0, 1, 2} (hole, first class, second class) on a window
    starting at site ``offset``.  ``touched`` records that a first class
    particle reached an end of the window."""

    values: np.ndarray
    offset: int = 1
    touched: bool = False

    def __post_init__(self):
        v = np.asarray(
            [int(c) for c in self.values] if isinstance(self.values, str) else self.values,
            dtype=np.uint8,
        )
        if v.ndim != 1 or v.size < 2 or v.max(initial=0) > 2:
            raise ValueError("need a 1-d vector over {0, 1, 2} with at least two sites")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size

    def __eq__(self, other):
        if not isinstance(other, ThreeSpeciesConfiguration):
            return NotImplemented
        return self.offset == other.offset and np.array_equal(self.values, other.values)

    __hash__ = None


def evolve_second_class(xi0: ThreeSpeciesConfiguration, env: Environment, stream: EventStream, t):
    """Priority dynamics: a ring swaps the two sites when the mover outranks
    its target (first class > second class > hole) under the HEAD/TAIL rule."""
    if xi0.offset != env.offset or len(xi0) != len(env):
        raise ValueError("configuration and environment windows differ")
    stream._check_time(t)
    idx = stream._indices_for(env)
    xi = xi0.values.copy()
    touched = K.second_class_events(
        xi, np.ascontiguousarray(env.rates), stream.times, idx, stream.heads, stream.marks, float(t)
    )
    return ThreeSpeciesConfiguration(xi, xi0.offset, bool(touched or xi0.touched))


def _values(xi):
    return xi.values if isinstance(xi, ThreeSpeciesConfiguration) else np.asarray(xi, dtype=np.uint8)


def project_2to1(xi) -> np.ndarray:
    """Second class particles seen as particles."""
    return (_values(xi) > 0).astype(np.uint8)


def project_2to0(xi) -> np.ndarray:
    """Second class particles seen as holes."""
    return (_values(xi) == 1).astype(np.uint8)


def project_star(xi) -> np.ndarray:
    """Delete first class sites and read second class particles as particles.

    Sites are re-indexed by the increasing enumeration of the non-first-class
    sites; :func:`star_anchor` gives the site playing the role of index 0.
    """
    v = _values(xi)
    if not np.any(v == 2):
        raise ValueError("star projection needs a second class particle in the window")
    keep = v[v != 1]
    return (keep == 2).astype(np.uint8)


def star_anchor(xi) -> int:
    """Site of the leftmost second class particle (index 0 of the star view)."""
    v = _values(xi)
    twos = np.flatnonzero(v == 2)
    if twos.size == 0:
        raise ValueError("no second class particle in the window")
    offset = xi.offset if isinstance(xi, ThreeSpeciesConfiguration) else 1
    return int(twos[0]) + offset


__all__ = [
    "EventStream",
    "CensoringScheme",
    "ThreeSpeciesConfiguration",
    "StreamExhausted",
    "build_event_stream",
    "make_box_censoring",
    "evolve",
    "evolve_censored",
    "evolve_coupled",
    "coupled_violations",
    "coalescence_time",
    "hitting_time_ground",
    "evolve_second_class",
    "project_2to1",
    "project_2to0",
    "project_star",
    "star_anchor",
    "stream_key",
    "replica_keys",
    "trajectory",
    "write_trajectory_csv",
]
