"""Boundary driven exclusion on a box and the modified segment process.

The box ``[M]`` exchanges particles with two reservoirs: a particle is
created at site 1 at rate 1 when it is empty and destroyed at site M at rate
1 when it is occupied.  Inside, particles step right at rate ``1/2 + c`` and
left at rate ``1/2 - c``.  ``c = 0`` is the symmetric box, whose stationary
density decreases linearly from ``1 - 1/(2M)`` to ``1/(2M)``.

The modified process runs on a segment containing such a box as a barrier;
see :func:`simulate_modified_process`.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from . import _kernels as K
from .env import Environment
from .graphical import stream_key
from .statespace import as_config

EXACT_BOX_CAP = 14


@dataclass(frozen=True)
class BoundaryChainSpec:
    M: int
    c: float = 0.0

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 2:
            raise ValueError("box length M must be an integer >= 2")
        if not -0.5 < self.c < 0.5:
            raise ValueError("tilt c must lie in (-1/2, 1/2)")

    @property
    def right_rate(self) -> float:
        return 0.5 + self.c

    @property
    def left_rate(self) -> float:
        return 0.5 - self.c


def linear_profile(M: int) -> np.ndarray:
    """Stationary density of the symmetric box: ``(M + 1/2 - i) / M``."""
    i = np.arange(1, M + 1)
    return (M + 0.5 - i) / M


def tilted_bound(M: int, c: float) -> float:
    """Upper bound ``2cM + 2/(M+1)`` on the last-site density for ``c > 0``."""
    return 2 * c * M + 2 / (M + 1)


# --------------------------------------------------------------------------
# exact solution on 2^M states
# --------------------------------------------------------------------------


def boundary_generator(spec: BoundaryChainSpec):
    """Sparse generator on ``{0,1}^M``; bit ``i - 1`` of a state is site ``i``."""
    M = spec.M
    if M > EXACT_BOX_CAP:
        raise ValueError(f"2^{M} states exceed the exact cap 2^{EXACT_BOX_CAP}")
    size = 1 << M
    s = np.arange(size)
    bit = lambda i: (s >> i) & 1  # noqa: E731
    rows, cols, vals = [], [], []

    def add(mask, target, rate):
        idx = np.flatnonzero(mask)
        rows.append(idx)
        cols.append(target[idx])
        vals.append(np.full(idx.size, rate))

    add(bit(0) == 0, s | 1, 1.0)
    add(bit(M - 1) == 1, s & ~(1 << (M - 1)), 1.0)
    for i in range(M - 1):
        swapped = s ^ (3 << i)
        add((bit(i) == 1) & (bit(i + 1) == 0), swapped, spec.right_rate)
        add((bit(i) == 0) & (bit(i + 1) == 1), swapped, spec.left_rate)
    r, c, v = (np.concatenate(a) for a in (rows, cols, vals))
    off = sp.csr_matrix((v, (r, c)), shape=(size, size))
    return (off - sp.diags(np.asarray(off.sum(axis=1)).ravel())).tocsr()


def boundary_stationary(spec: BoundaryChainSpec) -> np.ndarray:
    """Stationary vector over the ``2^M`` states."""
    L = boundary_generator(spec)
    A = L.T.tolil()
    A[0, :] = np.ones(A.shape[1])
    rhs = np.zeros(A.shape[0])
    rhs[0] = 1.0
    pi = spsolve(A.tocsc(), rhs)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def _bits(M):
    s = np.arange(1 << M)
    return ((s[:, None] >> np.arange(M)) & 1).astype(np.uint8)


def exact_boundary_profile(spec: BoundaryChainSpec) -> np.ndarray:
    """Stationary density at sites ``1..M``."""
    return boundary_stationary(spec) @ _bits(spec.M)


def sample_stationary_box(spec: BoundaryChainSpec, rng: np.random.Generator, size: int | None = None):
    """Exact draws from the stationary law of the box."""
    pi = boundary_stationary(spec)
    picks = rng.choice(pi.size, size=1 if size is None else size, p=pi)
    out = _bits(spec.M)[picks]
    return out[0] if size is None else out


@dataclass(frozen=True)
class BlytheFit:
    gamma: float
    M: tuple
    last_density: tuple
    slope: float
    intercept: float

    @property
    def predicted_slope(self) -> float:
        q = (0.5 + self.gamma) / (0.5 - self.gamma)
        return -0.5 * math.log(q)


def blythe_decay_check(gamma: float, M_list=range(6, 13)) -> BlytheFit:
    """Fit ``log E[sigma(M)]`` against ``M`` for the box tilted by ``c = -gamma``.

    Against the drift the last-site density decays like ``q^{-M/2}``, so the
    slope should approach ``-ln(q)/2`` with ``q = (1/2 + gamma)/(1/2 - gamma)``.
    """
    if not 0 < gamma < 0.5:
        raise ValueError("gamma must lie in (0, 1/2)")
    Ms = tuple(int(m) for m in M_list)
    if len(Ms) < 2:
        raise ValueError("need at least two box lengths")
    last = tuple(float(exact_boundary_profile(BoundaryChainSpec(m, -gamma))[-1]) for m in Ms)
    slope, intercept = np.polyfit(np.array(Ms, float), np.log(last), 1)
    return BlytheFit(gamma, Ms, last, float(slope), float(intercept))


# --------------------------------------------------------------------------
# simulation
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BoundaryRun:
    sigma: np.ndarray
    annihilations: int
    horizon: float
    counts_at: np.ndarray | None = None
    snapshots: np.ndarray | None = None


def simulate_boundary(spec: BoundaryChainSpec, sigma0, horizon: float, seed, sample_times=None) -> BoundaryRun:
    """Run the box from ``sigma0``; counts annihilations at site ``M``.

    The creation clock and the ``M`` site clocks are independent rate-2
    streams with coin and mark, so creations and annihilations occur on
    HEAD rings (rate 1) and interior moves follow the mark.
    """
    sigma0 = as_config(sigma0)
    if sigma0.size != spec.M:
        raise ValueError(f"initial box state has {sigma0.size} sites, expected {spec.M}")
    if not horizon >= 0:
        raise ValueError("horizon must be non-negative")
    times = np.asarray([] if sample_times is None else sample_times, dtype=float)
    if times.size and (np.any(np.diff(times) < 0) or times[-1] > horizon):
        raise ValueError("sample times must be sorted and inside the horizon")
    sigma, z, z_at, snaps = K.boundary_run(stream_key(seed), sigma0, float(spec.c), float(horizon), times)
    if sample_times is None:
        return BoundaryRun(sigma, int(z), float(horizon))
    return BoundaryRun(sigma, int(z), float(horizon), z_at, snaps)


def burn_in_time(M: int) -> float:
    return 10.0 * M * M


def mc_boundary_profile(spec: BoundaryChainSpec, samples: int, seed, *, burn_in=None, spacing=1.0, batches=100):
    """Time-averaged density along one long run, with batch-means errors.

    Returns ``(density, stderr)``; samples are taken every ``spacing`` time
    units after ``burn_in`` (default ``10 M^2``).
    """
    if samples < batches or samples % batches:
        raise ValueError("samples must be a positive multiple of batches")
    burn = burn_in_time(spec.M) if burn_in is None else float(burn_in)
    times = burn + spacing * np.arange(samples)
    run = simulate_boundary(spec, np.zeros(spec.M, np.uint8), times[-1], seed, times)
    means = run.snapshots.reshape(batches, -1, spec.M).mean(axis=1)
    return means.mean(axis=0), means.std(axis=0, ddof=1) / np.sqrt(batches)


def annihilation_rate(spec: BoundaryChainSpec, horizon: float, replicas: int, seed):
    """Mean of ``Z_t / t`` from stationary starts, with its standard error."""
    ss = np.random.SeedSequence(seed)
    rng = np.random.default_rng(ss.spawn(1)[0])
    starts = sample_stationary_box(spec, rng, replicas)
    keys = ss.generate_state(replicas, np.uint64)
    z = K.boundary_count_batch(keys, starts, float(spec.c), float(horizon)) / horizon
    return float(z.mean()), float(z.std(ddof=1) / np.sqrt(replicas)) if replicas > 1 else 0.0


def write_profile_csv(path, spec: BoundaryChainSpec, density, stderr=None) -> None:
    stderr = np.zeros(len(density)) if stderr is None else stderr
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["M", "c", "site", "density", "stderr"])
        for i, (d, e) in enumerate(zip(density, stderr), start=1):
            w.writerow([spec.M, repr(float(spec.c)), i, repr(float(d)), repr(float(e))])


# --------------------------------------------------------------------------
# barrier intervals and the modified process
# --------------------------------------------------------------------------


def find_low_drift_interval(env: Environment, M: int, c_threshold: float = 0.0):
    """Leftmost run of ``M`` sites with ``omega <= 1/2 + c_threshold``.

    The run must lie in ``[ceil(N/8), floor(N/4) - (M+1)]`` (positions
    counted from the left end of the environment).  Returns the site labels
    ``(x, y)`` of its ends, or ``None``.
    """
    n = len(env)
    lo, hi = -(-n // 8), n // 4 - (M + 1)
    if hi - lo + 1 < M:
        raise ValueError(f"search window [{lo}, {hi}] is shorter than M = {M}")
    ok = env.rates <= 0.5 + c_threshold
    run = 0
    for pos in range(lo, hi + 1):
        run = run + 1 if ok[pos - 1] else 0
        if run == M:
            start = pos - M + 1
            return env.offset + start - 1, env.offset + pos - 1
    return None


def flatten_environment(env: Environment, c: float = 0.0) -> Environment:
    """``1/2 + c`` where ``omega <= 1/2 + c``, else 1."""
    level = 0.5 + c
    return Environment(np.where(env.rates <= level, level, 1.0), env.offset)


@dataclass(frozen=True, eq=False)
class ModifiedRun:
    """Output of :func:`simulate_modified_process`.

    ``crossings`` and ``annihilations`` are counted up to ``min(tau_star,
    horizon)``; ``mismatches`` counts rings before ``tau_star`` after which
    the interval and the coupled box disagree.
    """

    final: np.ndarray
    tau_star: float
    crossings: int
    crossings_total: int
    annihilations: int
    mismatches: int
    suppressed: int
    sample_times: np.ndarray
    leftmost: np.ndarray


def simulate_modified_process(eta0, env: Environment, interval, horizon: float, seed, *, c=0.0, sample_times=None):
    """Segment process with the interval ``[x, y]`` acting as a barrier.

    Dynamics use the flattened environment (``1/2 + c`` on slow sites, 1
    elsewhere) with these exceptions:

    1. the rightmost particle left of ``x`` jumps straight to ``x`` on a HEAD
       ring when ``x`` is empty;
    2. a HEAD ring at ``y`` moves its particle to the rightmost empty site;
    3. particles never step left out of ``y + 1``, nor out of ``x``.

    A boundary box of length ``y - x + 1`` is run on the same rings: interval
    rings drive its interior, the HEAD ring at ``y`` its annihilation and the
    HEAD ring of the rightmost particle left of ``x`` its creation.  Until
    ``tau_star`` (no particle left of ``x``) the two agree site by site.
    """
    eta0 = as_config(eta0)
    if eta0.size != len(env):
        raise ValueError("configuration and environment sizes differ")
    x, y = interval
    xw, yw = x - env.offset, y - env.offset
    if not (0 <= xw < yw < len(env) - 1):
        raise ValueError(f"invalid interval [{x}, {y}] for sites {env.sites}")
    rates = flatten_environment(env, c).rates
    times = np.asarray([] if sample_times is None else sample_times, dtype=float)
    xi, tau, cr, cr_all, ann, mis, sup, left = K.modified_run(
        stream_key(seed), eta0, np.ascontiguousarray(rates), xw, yw, float(c), float(horizon), times
    )
    return ModifiedRun(xi, float(tau), int(cr), int(cr_all), int(ann), int(mis), int(sup), times, left + env.offset)


def modified_initial_configuration(n: int, k: int, interval, spec_c: float = 0.0, seed=None) -> np.ndarray:
    """Start with ``floor(k/8)`` particles on the far left, the interval in
    its box equilibrium, and the remaining particles packed into the
    rightmost empty sites of ``[N/2, N]``."""
    x, y = interval
    M = y - x + 1
    eta = np.zeros(n, dtype=np.uint8)
    eta[: k // 8] = 1
    if k // 8 >= x:
        raise ValueError("interval overlaps the initial left block")
    rng = np.random.default_rng(seed)
    eta[x - 1 : y] = sample_stationary_box(BoundaryChainSpec(M, spec_c), rng)
    missing = k - int(eta.sum())
    for pos in range(n, -(-n // 2) - 1, -1):
        if missing <= 0:
            break
        if eta[pos - 1] == 0 and pos > y:
            eta[pos - 1] = 1
            missing -= 1
    if missing != 0:
        raise ValueError("not enough room to place k particles")
    return eta
