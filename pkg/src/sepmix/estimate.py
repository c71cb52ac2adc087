"""Monte Carlo estimators for segments too large for the exact engine.

* :func:`mc_mixing_upper` bounds the mixing time by a quantile of the
  coalescence time of the top and ground chains.
* :func:`mc_event_A_prob` and :func:`certify_lower_bound` give lower bounds
  from the occupation of the left quarter.
* :func:`mc_hitting_eps` measures hitting times of the ground state on a
  window of the line.
* :func:`scaling_experiment` regresses an estimator on ``N``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from . import _kernels as K
from .env import Environment, EnvironmentLaw, classify, regime_label, sample_environment
from .exact import pi_A_bound
from .graphical import CensoringScheme, replica_keys
from .statespace import as_config, top_state

MAX_EVENTS = 10**8
BOOTSTRAP = 200
HORIZON_GROWTH = 1.5
# record label for an environment whose quantile exceeds the stopping horizon
CENSORED = "mixing_upper_censored"
CSV_FIELDS = ("regime", "estimator", "N", "k", "eps", "replicas", "estimate", "stderr", "seed")


class HorizonTooShort(RuntimeError):
    """Too many replicas were still running when the event budget ran out."""

    def __init__(self, message, censored_quantile):
        super().__init__(message)
        self.censored_quantile = censored_quantile


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    replicas: int
    samples: np.ndarray = field(repr=False, compare=False)


def _quantile(x, level):
    return float(np.quantile(x, level, method="inverted_cdf"))


def _bootstrap_stderr(x, level, seed, n_boot=BOOTSTRAP):
    if x.size < 2:
        return 0.0
    rng = np.random.default_rng(seed)
    picks = rng.integers(0, x.size, size=(n_boot, x.size))
    qs = np.quantile(x[picks], level, axis=1, method="inverted_cdf")
    finite = qs[np.isfinite(qs)]
    return float(finite.std(ddof=1)) if finite.size > 1 else math.inf


# --------------------------------------------------------------------------
# upper bound from coalescence
# --------------------------------------------------------------------------


class _CoalescenceRuns:
    """Resumable top/ground coalescence runs for one environment."""

    def __init__(self, env: Environment, n: int, k: int, eps: float, keys):
        self.rates = np.ascontiguousarray(env.rates)
        self.times = np.full(len(keys), np.inf)
        self.runs = {j: K.coalescence_start(key, env.offset, n, k) for j, key in enumerate(keys)}
        self.allowed = math.floor(eps * len(keys))
        self.level = 1 - eps

    @property
    def resolved(self) -> bool:
        return len(self.runs) <= self.allowed

    def capped(self, max_events) -> int:
        return sum(int(r[3][1] >= max_events) for r in self.runs.values())

    def advance(self, h: float, max_events) -> bool:
        for j in list(self.runs):
            st, lo, hi, acc = self.runs[j]
            t = K.coalescence_resume(st, lo, hi, acc, self.rates, h, max_events)
            if np.isfinite(t):
                self.times[j] = t
                del self.runs[j]
        return self.resolved

    def stuck(self, max_events) -> bool:
        return not self.resolved and self.capped(max_events) > self.allowed

    def quantile(self) -> float:
        return _quantile(self.times, self.level)


def _check_mixing_args(env, n, k, eps):
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    n = len(env) if n is None else n
    if n != len(env):
        raise ValueError("environment length differs from N")
    top_state(n, k)
    return n


def mc_mixing_upper(
    env: Environment, n: int | None, k: int, eps: float, replicas: int, seed, *, horizon=None, max_events=MAX_EVENTS
) -> Estimate:
    """Empirical ``(1 - eps)``-quantile of the coalescence time.

    Every chain is sandwiched between the top and ground chains, so once those
    meet all starts have coupled; the quantile therefore bounds the mixing
    time.  All replicas advance together in time, starting at ``horizon``
    (default ``8N``) and growing it geometrically; runs are resumed, never
    restarted, and the loop stops as soon as the quantile is resolved.  Each
    replica may spend at most ``max_events`` rings.  The stderr is a
    bootstrap over replicas.
    """
    n = _check_mixing_args(env, n, k, eps)
    h = float(8 * n if horizon is None else horizon)
    if not h > 0:
        raise ValueError("horizon must be positive")
    runs = _CoalescenceRuns(env, n, k, eps, replica_keys(seed, replicas))
    while not runs.advance(h, max_events):
        if runs.stuck(max_events):
            raise HorizonTooShort(
                f"{len(runs.runs)}/{replicas} replicas still apart at t={h:g} after {max_events} rings each",
                runs.quantile(),
            )
        h *= HORIZON_GROWTH
    value = runs.quantile()
    return Estimate(value, _bootstrap_stderr(runs.times, runs.level, [*np.atleast_1d(seed), 1]), replicas, runs.times)


def _median_over_envs(envs, n, k, eps, replicas, seeds, max_events=MAX_EVENTS):
    """Quantiles for several environments run on a shared horizon.

    Stops once enough environments are resolved to fix the median: an
    unresolved environment has its quantile above the current horizon, which
    is above every resolved one.  Returns ``(estimates, median)`` where each
    estimate is an :class:`Estimate` or ``("censored", horizon)``.
    """
    need = len(envs) // 2 + 1
    runs = [_CoalescenceRuns(env, n, k, eps, replica_keys(sd, replicas)) for env, sd in zip(envs, seeds)]
    out = [None] * len(envs)
    h = 8.0 * n
    while True:
        for e, r in enumerate(runs):
            if out[e] is None and r.advance(h, max_events):
                se = _bootstrap_stderr(r.times, r.level, [*np.atleast_1d(seeds[e]), 1])
                out[e] = Estimate(r.quantile(), se, replicas, r.times)
        done = [o for o in out if o is not None]
        if len(done) >= need:
            break
        if sum(r.stuck(max_events) for e, r in enumerate(runs) if out[e] is None) > len(envs) - need:
            raise HorizonTooShort(f"median over environments not resolved by t={h:g}", math.inf)
        h *= HORIZON_GROWTH
    vals = sorted([o.value for o in done] + [math.inf] * (len(envs) - len(done)))
    m = len(vals)
    median = vals[m // 2] if m % 2 else 0.5 * (vals[m // 2 - 1] + vals[m // 2])
    return [o if o is not None else ("censored", h) for o in out], float(median)


# --------------------------------------------------------------------------
# lower bound from event A
# --------------------------------------------------------------------------


def _evolve_many(env, eta0, t, keys, scheme=None):
    if scheme is None:
        blocked, bps = np.zeros((0, 0), dtype=np.bool_), np.zeros(1)
    else:
        blocked, bps = scheme.kernel_args()
    return K.evolve_batch(keys, env.offset, as_config(eta0), np.ascontiguousarray(env.rates), float(t), blocked, bps)


def mc_event_A_prob(env: Environment, n: int | None, k: int, init, t: float, replicas: int, seed) -> Estimate:
    """Fraction of replicas with a particle in the left quarter at time ``t``."""
    n = len(env) if n is None else n
    eta0 = top_state(n, k) if init is None else as_config(init)
    if eta0.size != n or int(eta0.sum()) != k:
        raise ValueError("initial configuration does not lie in Omega_{N,k}")
    finals = _evolve_many(env, eta0, t, replica_keys(seed, replicas))
    hits = finals[:, : n // 4].any(axis=1).astype(float)
    p = float(hits.mean())
    return Estimate(p, math.sqrt(p * (1 - p) / replicas), replicas, hits)


@dataclass(frozen=True)
class LowerBoundCertificate:
    t: float
    p_A: float
    stderr: float
    bound: float
    certified: bool


def certify_lower_bound(env: Environment, n: int | None, k: int, t: float, replicas: int, seed, init=None):
    """Certify ``t_mix(1/4) > t`` when ``P(eta_t in A) - bound > 1/4 + 3 stderr``.

    The distance to stationarity at ``t`` is at least ``P(eta_t in A) - pi(A)``
    and ``pi(A)`` is at most :func:`sepmix.exact.pi_A_bound`.
    """
    n = len(env) if n is None else n
    est = mc_event_A_prob(env, n, k, init, t, replicas, seed)
    bound = pi_A_bound(env, n, k)
    ok = est.value - bound > 0.25 + 3 * est.stderr
    return LowerBoundCertificate(float(t), est.value, est.stderr, bound, bool(ok))


# --------------------------------------------------------------------------
# displacement of the leftmost particle
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DisplacementCurve:
    times: np.ndarray
    mean: np.ndarray
    quantiles: dict
    paths: np.ndarray = field(repr=False)


def box_scheme_parameters(n: int, u: float = 1.0, s: float = 1.0):
    """Box half-width ``U = u log N`` and period ``S = s log^3 N`` (at least 1)."""
    ln = math.log(n)
    return max(1, round(u * ln)), max(1.0, s * ln**3)


def displacement_experiment(
    env: Environment, n_sites: int | None, k: int, scheme: CensoringScheme | None, horizon: float, replicas: int, seed,
    *, grid=None, levels=(0.1, 0.5, 0.9),
) -> DisplacementCurve:
    """Leftmost particle position over time from the top state.

    ``scheme`` may be ``None`` (plain dynamics) or a censoring scheme such as
    :func:`sepmix.graphical.make_box_censoring`.
    """
    n_sites = len(env) if n_sites is None else n_sites
    grid = np.linspace(0.0, horizon, 51) if grid is None else np.asarray(grid, dtype=float)
    if np.any(np.diff(grid) < 0):
        raise ValueError("grid must be sorted")
    if scheme is None:
        blocked, bps = np.zeros((0, 0), dtype=np.bool_), np.zeros(1)
    else:
        blocked, bps = scheme.kernel_args()
    keys = replica_keys(seed, replicas)
    paths = K.leftmost_path_batch(
        keys, env.offset, top_state(n_sites, k), np.ascontiguousarray(env.rates), grid, blocked, bps
    ) + env.offset
    qs = {lv: np.quantile(paths, lv, axis=0) for lv in levels}
    return DisplacementCurve(grid, paths.mean(axis=0), qs, paths)


# --------------------------------------------------------------------------
# hitting times on a window of the line
# --------------------------------------------------------------------------


def line_top_state(env_window: Environment, n: int, k: int) -> np.ndarray:
    """Particles on ``[k]`` and on every window site right of ``n``."""
    sites = np.arange(env_window.offset, env_window.offset + len(env_window))
    return (((sites >= 1) & (sites <= k)) | (sites > n)).astype(np.uint8)


def line_ground_state(env_window: Environment, level: int) -> np.ndarray:
    """Particles on every window site right of ``level``."""
    sites = np.arange(env_window.offset, env_window.offset + len(env_window))
    return (sites > level).astype(np.uint8)


def mc_hitting_eps(
    env_window: Environment, n: int, k: int, eps: float, replicas: int, seed, *, horizon=None, max_events=MAX_EVENTS
) -> Estimate:
    """``(1 - eps)``-quantile of the time to reach ``1{x > N-k}`` from
    ``1{x in [k]} + 1{x > N}`` on a window of the line.

    The window must leave room on the left and hold a packed block on the
    right; if more than ``eps/10`` of the replicas touch either end the
    window is declared too small.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if env_window.offset > 1 or env_window.offset + len(env_window) - 1 <= n:
        raise ValueError("window must contain [1, N] and a site right of N")
    eta0 = line_top_state(env_window, n, k)
    target = line_ground_state(env_window, n - k)
    h = float(16 * n if horizon is None else horizon)
    keys = replica_keys(seed, replicas)
    times, left, right = K.hitting_batch(
        keys, env_window.offset, np.ascontiguousarray(env_window.rates), eta0, target, h, max_events
    )
    touched = float(np.mean(left | right))
    if touched >= eps / 10:
        raise ValueError(f"window too small: {touched:.3f} of replicas touched an end")
    value = _quantile(times, 1 - eps)
    if not np.isfinite(value):
        raise HorizonTooShort(f"quantile not resolved by t={h:g}", value)
    return Estimate(value, _bootstrap_stderr(times, 1 - eps, [*np.atleast_1d(seed), 2]), replicas, times)


# --------------------------------------------------------------------------
# scaling over N
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ScalingRecord:
    regime: str
    estimator: str
    N: int
    k: int
    eps: float
    replicas: int
    estimate: float
    stderr: float
    seed: str
    quantile: float = field(default=0.75, compare=False)

    def row(self) -> dict:
        d = asdict(self)
        return {f: d[f] for f in CSV_FIELDS}


@dataclass(frozen=True)
class ScalingResult:
    records: tuple
    N_grid: tuple
    medians: tuple
    slope: float
    slope_stderr: float
    ci: tuple
    dropped_smallest: bool

    def slope_record(self) -> ScalingRecord:
        r0 = self.records[0]
        used = len(self.N_grid) - int(self.dropped_smallest)
        return ScalingRecord(r0.regime, "loglog_slope", 0, 0, r0.eps, used, self.slope, self.slope_stderr, r0.seed)


def environment_for(law: EnvironmentLaw, n: int, seed, index: int, n_max: int) -> Environment:
    """Environment ``index`` of a scaling run: the middle ``n`` sites of one
    draw of length ``n_max``.

    Windows for different ``N`` are nested around a common centre (common
    random numbers), so a stretch that sits in the bulk at one size stays in
    the bulk at the others.  Each window is still an i.i.d. sample of ``law``.
    """
    if not 1 <= n <= n_max:
        raise ValueError("need 1 <= n <= n_max")
    full = sample_environment(law, n_max, [*np.atleast_1d(seed), index])
    start = (n_max - n) // 2
    return Environment(full.rates[start : start + n])


def _ols(xs, ys):
    fit = stats.linregress(xs, ys)
    resid = ys - (fit.intercept + fit.slope * xs)
    return fit, resid


def scaling_experiment(
    law: EnvironmentLaw, N_grid, estimator: str = "mixing_upper", eps: float = 0.25, replicas: int = 200, seed=0,
    *, rho: float = 0.5, n_envs: int = 5,
) -> ScalingResult:
    """Quenched median over ``n_envs`` environments per ``N`` and the
    least-squares slope of ``log(median)`` against ``log(N)``.

    The environments of one ``N`` share a growing horizon, which stops once
    the median is fixed; an environment still unresolved then is recorded
    with estimator ``"mixing_upper_censored"`` and the horizon as a lower
    bound.  The smallest ``N`` is left out of the fit when its residual
    exceeds two residual standard deviations.
    """
    grid = tuple(int(n) for n in N_grid)
    if len(grid) < 4 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("N_grid must be increasing with at least four points")
    if estimator != "mixing_upper":
        raise ValueError(f"unknown estimator {estimator!r}")
    if not 0 < rho < 1:
        raise ValueError("density rho must lie in (0, 1)")
    label = regime_label(classify(law))
    seed_txt = str(seed)
    records, medians = [], []
    for n in grid:
        k = max(1, min(n - 1, math.floor(rho * n)))
        envs = [environment_for(law, n, seed, e, grid[-1]) for e in range(n_envs)]
        seeds = [[*np.atleast_1d(seed), n, e] for e in range(n_envs)]
        ests, median = _median_over_envs(envs, n, k, eps, replicas, seeds)
        for e, est in enumerate(ests):
            if isinstance(est, Estimate):
                rec = ScalingRecord(label, estimator, n, k, eps, replicas, est.value, est.stderr, f"{seed_txt}/{e}", 1 - eps)
            else:
                rec = ScalingRecord(label, CENSORED, n, k, eps, replicas, est[1], math.nan, f"{seed_txt}/{e}", 1 - eps)
            records.append(rec)
        medians.append(median)
    xs, ys = np.log(grid), np.log(medians)
    fit, resid = _ols(xs, ys)
    dropped = False
    sigma = resid.std(ddof=2) if len(xs) > 2 else 0.0
    if sigma > 0 and abs(resid[0]) > 2 * sigma:
        fit, resid = _ols(xs[1:], ys[1:])
        dropped = True
    dof = len(xs) - int(dropped) - 2
    half = stats.t.ppf(0.975, dof) * fit.stderr if dof > 0 else math.inf
    return ScalingResult(
        tuple(records), grid, tuple(medians), float(fit.slope), float(fit.stderr),
        (float(fit.slope - half), float(fit.slope + half)), dropped,
    )


def records_to_csv(records, fh=None) -> str:
    """Write records in the documented column order; returns the text."""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in records:
        row = r.row()
        row["eps"] = repr(float(row["eps"]))
        row["estimate"] = repr(float(row["estimate"]))
        row["stderr"] = repr(float(row["stderr"]))
        w.writerow(row)
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text


def records_from_csv(text: str):
    rows = list(csv.DictReader(io.StringIO(text)))
    out = []
    for r in rows:
        out.append(
            ScalingRecord(
                r["regime"], r["estimator"], int(r["N"]), int(r["k"]), float(r["eps"]), int(r["replicas"]),
                float(r["estimate"]), float(r["stderr"]), r["seed"],
            )
        )
    return out
