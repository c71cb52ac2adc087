"""Exact analysis of the exclusion process on small segments.

States are indexed by :func:`sepmix.statespace.enumerate_states`.  The
generator is a sparse matrix; transient laws come from uniformization,
which gives a certified truncation error; stationary laws come from the
product formula or from a linear solve on the closed communicating class.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import spsolve
from scipy.stats import poisson

from .env import Environment
from .statespace import (
    DEFAULT_STATE_CAP,
    StateSpaceTooLarge,
    as_config,
    enumerate_states,
    index_of,
    leq_matrix,
    n_states,
)

UNIFORMIZATION_TOL = 1e-10
UPSET_STATE_CAP = 300
UPSET_BUDGET = 500_000


@dataclass(frozen=True, eq=False)
class Distribution:
    """Probability vector over the enumeration of ``Omega_{n,k}``."""

    p: np.ndarray
    n: int
    k: int

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.shape != (n_states(self.n, self.k),):
            raise ValueError(f"vector of length {p.size} does not index Omega_{{{self.n},{self.k}}}")
        if p.min(initial=0.0) < -1e-9 or abs(p.sum() - 1) > 1e-8:
            raise ValueError("not a probability vector")
        object.__setattr__(self, "p", p)

    def __getitem__(self, eta) -> float:
        return float(self.p[index_of(as_config(eta))])

    def mass(self, mask) -> float:
        return float(self.p[np.asarray(mask, dtype=bool)].sum())


def point_mass(eta) -> Distribution:
    eta = as_config(eta)
    n, k = eta.size, int(eta.sum())
    p = np.zeros(n_states(n, k))
    p[index_of(eta)] = 1.0
    return Distribution(p, n, k)


def _rates(env: Environment, n: int | None) -> np.ndarray:
    n = len(env) if n is None else n
    if len(env) != n:
        raise ValueError(f"environment has {len(env)} sites, expected {n}")
    return env.rates


# --------------------------------------------------------------------------
# generator
# --------------------------------------------------------------------------


def _transitions(rates, states, blocked=None):
    """Source rows, target rows and rates of every nearest neighbour move."""
    n = states.shape[1]
    rows, cols, vals = [], [], []
    for x in range(n - 1):
        if blocked is not None and blocked[x]:
            continue
        for src, dst, rate in ((x, x + 1, rates[x]), (x + 1, x, 1.0 - rates[x + 1])):
            if rate <= 0:
                continue
            movable = np.flatnonzero((states[:, src] == 1) & (states[:, dst] == 0))
            if movable.size == 0:
                continue
            moved = states[movable].copy()
            moved[:, src] = 0
            moved[:, dst] = 1
            rows.append(movable)
            cols.append(index_of(moved))
            vals.append(np.full(movable.size, rate))
    if not rows:
        return np.zeros(0, int), np.zeros(0, int), np.zeros(0)
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)


def generator_matrix(env: Environment, n: int | None = None, k: int = 1, *, blocked=None, cap=DEFAULT_STATE_CAP):
    """Sparse generator ``L`` with ``L[a, b]`` the rate of ``a -> b``.

    ``blocked`` optionally flags closed edges (entry ``x - 1`` for ``{x, x+1}``).
    """
    rates = _rates(env, n)
    states = enumerate_states(rates.size, k, cap)
    size = states.shape[0]
    r, c, v = _transitions(rates, states, blocked)
    off = sp.csr_matrix((v, (r, c)), shape=(size, size))
    exit_rates = np.asarray(off.sum(axis=1)).ravel()
    return (off - sp.diags(exit_rates)).tocsr()


# --------------------------------------------------------------------------
# stationary law
# --------------------------------------------------------------------------


def stationary_product(env: Environment, n: int | None = None, k: int = 1) -> Distribution:
    """Product-form stationary law; needs every ``omega(x) < 1``."""
    rates = _rates(env, n)
    if np.any(rates >= 1):
        raise ValueError("product formula needs omega(x) < 1 at every site")
    n = rates.size
    states = enumerate_states(n, k)
    # weight of a particle at site z: sum_{x < z} log(omega(x) / (1 - omega(x+1)))
    step = np.log(rates[:-1]) - np.log1p(-rates[1:])
    site_weight = np.concatenate(([0.0], np.cumsum(step)))
    logw = states @ site_weight
    w = np.exp(logw - logw.max())
    return Distribution(w / w.sum(), n, k)


def closed_class(L) -> np.ndarray:
    """Mask of the unique closed communicating class of a generator."""
    L = sp.csr_matrix(L)
    adj = L.copy()
    adj.setdiag(0)
    adj.eliminate_zeros()
    n_comp, labels = connected_components(adj, directed=True, connection="strong")
    # a class is closed when no edge leaves it
    coo = adj.tocoo()
    leaks = np.zeros(n_comp, dtype=bool)
    crossing = labels[coo.row] != labels[coo.col]
    leaks[labels[coo.row[crossing]]] = True
    closed = np.flatnonzero(~leaks)
    if closed.size != 1:
        raise ValueError(f"expected one closed class, found {closed.size}")
    return labels == closed[0]


def stationary_solve(env: Environment, n: int | None = None, k: int = 1) -> Distribution:
    """Stationary law from ``pi L = 0`` on the closed class, zero elsewhere."""
    rates = _rates(env, n)
    L = generator_matrix(env, rates.size, k)
    mask = closed_class(L)
    sub = L[mask][:, mask].T.tolil()
    m = sub.shape[0]
    pi = np.zeros(L.shape[0])
    if m == 1:
        pi[mask] = 1.0
        return Distribution(pi, rates.size, k)
    # swap one balance equation for the normalization
    sub[0, :] = np.ones(m)
    rhs = np.zeros(m)
    rhs[0] = 1.0
    sol = spsolve(sub.tocsc(), rhs)
    sol = np.clip(sol, 0.0, None)
    pi[mask] = sol / sol.sum()
    return Distribution(pi, rates.size, k)


def stationary(env: Environment, n: int | None = None, k: int = 1) -> Distribution:
    """Stationary law; product formula when it applies, else a linear solve."""
    rates = _rates(env, n)
    if np.all(rates < 1):
        return stationary_product(env, n, k)
    return stationary_solve(env, n, k)


# --------------------------------------------------------------------------
# transient laws
# --------------------------------------------------------------------------


def _uniformized(L, v, t, tol=UNIFORMIZATION_TOL):
    """``v exp(tL)`` for a row vector or a stack of row vectors ``v``."""
    if t < 0:
        raise ValueError("time must be non-negative")
    lam = float(-L.diagonal().min()) if L.shape[0] else 0.0
    if t == 0 or lam == 0:
        return np.array(v, dtype=float)
    lt = lam * t
    # smallest truncation whose Poisson tail is below tol
    n_terms = int(poisson.isf(tol, lt)) + 2
    weights = poisson.pmf(np.arange(n_terms), lt)
    PT = (sp.identity(L.shape[0], format="csr") + L / lam).T.tocsr()
    term = np.array(v, dtype=float).T
    out = weights[0] * term
    for w in weights[1:]:
        term = PT @ term
        out += w * term
    return out.T


def distribution_at(init: Distribution, env: Environment, t: float) -> Distribution:
    """Law at time ``t``; L1 truncation error at most 1e-10."""
    L = generator_matrix(env, init.n, init.k)
    return Distribution(_uniformized(L, init.p, t), init.n, init.k)


def transition_matrix(env: Environment, n: int | None, k: int, t: float) -> np.ndarray:
    """Dense ``exp(tL)``; row ``i`` is the law at ``t`` from state ``i``."""
    L = generator_matrix(env, n, k)
    return _uniformized(L, np.eye(L.shape[0]), t)


def censored_distribution_at(init: Distribution, env: Environment, scheme, t: float) -> Distribution:
    """Law at ``t`` when edges closed by ``scheme`` carry no transitions."""
    if scheme.n_sites != init.n:
        raise ValueError("scheme and state space sizes differ")
    p = init.p
    for start, stop, row in scheme.pieces(t):
        if stop > start:
            L = generator_matrix(env, init.n, init.k, blocked=row)
            p = _uniformized(L, p, stop - start)
    return Distribution(p, init.n, init.k)


def tv_distance(p, q) -> float:
    pa = p.p if isinstance(p, Distribution) else np.asarray(p, dtype=float)
    qa = q.p if isinstance(q, Distribution) else np.asarray(q, dtype=float)
    if pa.shape != qa.shape:
        raise ValueError("distributions live on different spaces")
    return 0.5 * float(np.abs(pa - qa).sum())


# --------------------------------------------------------------------------
# mixing time
# --------------------------------------------------------------------------


class _WorstCase:
    """Worst-case distance to stationarity over point-mass starts."""

    def __init__(self, env, n, k):
        self.L = generator_matrix(env, n, k)
        self.pi = stationary(env, n, k).p
        self.eye = np.eye(self.L.shape[0])

    def kernel(self, t):
        return _uniformized(self.L, self.eye, t)

    def distance(self, P):
        return 0.5 * float(np.abs(P - self.pi).sum(axis=1).max())

    def __call__(self, t):
        return self.distance(self.kernel(t))


def worst_case_tv(env: Environment, n: int | None, k: int, times) -> np.ndarray:
    d = _WorstCase(env, n, k)
    return np.array([d(t) for t in np.atleast_1d(times)])


def exact_mixing_time(env: Environment, n: int | None = None, k: int = 1, eps: float = 0.25, tol: float = 1e-6):
    """First time the worst-case TV distance falls below ``eps``.

    The worst-case curve is bracketed by doubling, checked to be
    non-increasing on a grid inside the bracket, then bisected until the
    bracket is shorter than ``tol``; the midpoint is returned.  Kernels are
    chained through the semigroup property, so every step only uniformizes
    over a short time.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    d = _WorstCase(env, n, k)
    if d.distance(d.eye) < eps:
        return 0.0
    lo, hi = 0.0, 1.0
    P_lo, P_hi = d.eye, d.kernel(1.0)
    while d.distance(P_hi) >= eps:
        lo, hi = hi, 2 * hi
        P_lo, P_hi = P_hi, P_hi @ P_hi
        if hi > 1e7:
            raise RuntimeError("no mixing within t = 1e7")
    step = d.kernel(hi / 16)
    P = d.eye
    curve = [d.distance(P)]
    for _ in range(16):
        P = P @ step
        curve.append(d.distance(P))
    if np.any(np.diff(curve) > 1e-9):
        raise RuntimeError("worst-case TV curve is not monotone on the bracket")
    while hi - lo > tol:
        half = 0.5 * (hi - lo)
        P_mid = P_lo @ d.kernel(half)
        if d.distance(P_mid) < eps:
            hi = lo + half
        else:
            lo, P_lo = lo + half, P_mid
    return 0.5 * (lo + hi)


# --------------------------------------------------------------------------
# first passage
# --------------------------------------------------------------------------


def mean_hitting_time(env: Environment, eta0, target) -> float:
    """``E[tau_target]`` from ``eta0`` by a linear solve."""
    eta0, target = as_config(eta0), as_config(target)
    n, k = eta0.size, int(eta0.sum())
    L = generator_matrix(env, n, k)
    a, b = index_of(eta0), index_of(target)
    if a == b:
        return 0.0
    keep = np.ones(L.shape[0], dtype=bool)
    keep[b] = False
    sub = L[keep][:, keep].tocsc()
    sol = spsolve(-sub, np.ones(sub.shape[0]))
    return float(np.atleast_1d(sol)[np.flatnonzero(keep).searchsorted(a)])


def hitting_tail(env: Environment, eta0, target, s: float) -> float:
    """``P(tau_target > s)`` from ``eta0`` via the chain absorbed at target."""
    eta0, target = as_config(eta0), as_config(target)
    n, k = eta0.size, int(eta0.sum())
    L = generator_matrix(env, n, k).tolil()
    b = index_of(target)
    L[b, :] = 0
    L = L.tocsr()
    p0 = np.zeros(L.shape[0])
    p0[index_of(eta0)] = 1.0
    p = _uniformized(L, p0, s)
    return float(max(0.0, 1.0 - p[b]))


# --------------------------------------------------------------------------
# stochastic dominance
# --------------------------------------------------------------------------


def _upsets(order: np.ndarray, budget: int):
    """Yield every up-set as a boolean mask, or raise once ``budget`` is spent.

    ``order[a, b]`` is ``a <= b``.  Elements are decided from the top down so
    an element may join only when everything above it already has.
    """
    size = order.shape[0]
    height = order.sum(axis=0)  # number of elements below, strictly monotone
    seq = np.argsort(-height, kind="stable")
    above = [np.flatnonzero(order[e] & (np.arange(size) != e)) for e in seq]
    mask = np.zeros(size, dtype=bool)
    count = 0

    def rec(pos):
        nonlocal count
        if pos == size:
            count += 1
            if count > budget:
                raise _BudgetExceeded
            yield mask
            return
        e = seq[pos]
        yield from rec(pos + 1)
        if mask[above[pos]].all():
            mask[e] = True
            yield from rec(pos + 1)
            mask[e] = False

    yield from rec(0)


class _BudgetExceeded(Exception):
    pass


def _dominates_upsets(p, q, order, atol, budget):
    for mask in _upsets(order, budget):
        if p[mask].sum() < q[mask].sum() - atol:
            return False
    return True


def _dominates_transport(p, q, order, atol):
    """Feasibility of a coupling that keeps the ``p`` sample above the ``q`` one.

    Maximizes flow from ``p``-mass at ``a`` to ``q``-mass at ``b <= a``; the
    law ``p`` dominates ``q`` exactly when all mass can be routed.
    """
    below, above = np.nonzero(order)  # pairs (b, a) with b <= a
    m = below.size
    size = p.size
    A = sp.vstack(
        [
            sp.csr_matrix((np.ones(m), (above, np.arange(m))), shape=(size, m)),
            sp.csr_matrix((np.ones(m), (below, np.arange(m))), shape=(size, m)),
        ]
    )
    res = linprog(
        -np.ones(m), A_ub=A, b_ub=np.concatenate([p, q]), bounds=(0, None), method="highs"
    )
    if res.status != 0:
        raise RuntimeError(f"transport problem failed: {res.message}")
    return -res.fun >= min(p.sum(), q.sum()) - atol


def stochastic_dominance(p, q, n=None, k=None, *, method="auto", atol=1e-10, budget=UPSET_BUDGET) -> bool:
    """Whether ``p`` stochastically dominates ``q``: ``p(U) >= q(U)`` on every up-set.

    ``method`` is ``"upsets"`` (enumeration), ``"transport"`` (coupling
    feasibility) or ``"auto"``: enumeration for at most 300 states within the
    budget, the transport check otherwise.
    """
    if isinstance(p, Distribution):
        n, k = p.n, p.k
    pa = p.p if isinstance(p, Distribution) else np.asarray(p, dtype=float)
    qa = q.p if isinstance(q, Distribution) else np.asarray(q, dtype=float)
    if n is None or k is None or pa.shape != qa.shape or pa.size != n_states(n, k):
        raise ValueError("distributions must index the same Omega_{N,k}")
    order = leq_matrix(enumerate_states(n, k))
    if method not in ("auto", "upsets", "transport"):
        raise ValueError(f"unknown method {method!r}")
    if method == "upsets" and pa.size > UPSET_STATE_CAP:
        raise StateSpaceTooLarge(f"up-set enumeration capped at {UPSET_STATE_CAP} states")
    if method in ("auto", "upsets") and pa.size <= UPSET_STATE_CAP:
        try:
            return _dominates_upsets(pa, qa, order, atol, budget)
        except _BudgetExceeded:
            if method == "upsets":
                raise StateSpaceTooLarge("up-set budget exhausted") from None
    return _dominates_transport(pa, qa, order, atol)


# --------------------------------------------------------------------------
# event A
# --------------------------------------------------------------------------


def event_A_mask(n: int, k: int) -> np.ndarray:
    return enumerate_states(n, k)[:, : n // 4].any(axis=1)


def pi_A_bound(env: Environment, n: int | None = None, k: int = 1, *, indexing: str = "moved") -> float:
    """Upper bound on the stationary mass of event A.

    ``N^2 max_{j <= N/4, l >= N/2} prod (1 - omega(x+1)) / omega(x)`` where
    the product runs over the sites a particle passes when moved from ``j``
    to ``l`` (``x = j .. l-1``, ``indexing="moved"``).  ``indexing="shifted"``
    uses ``x = j+1 .. l`` instead, restricted to ``l < N``.  Evaluated in log
    space.
    """
    rates = _rates(env, n)
    n = rates.size
    if 2 * k > n:
        raise ValueError("bound needs 2k <= N; swap particles and holes otherwise")
    # factor at x = 1..N-1; zero factors (omega(x+1) = 1) are counted apart
    zero = rates[1:] >= 1
    logf = np.where(zero, 0.0, np.log1p(-np.where(zero, 0.0, rates[1:])) - np.log(rates[:-1]))
    csum = np.concatenate(([0.0], np.cumsum(logf)))  # csum[x] = sum of factors 1..x
    zsum = np.concatenate(([0], np.cumsum(zero)))
    best = -np.inf
    for j in range(1, n // 4 + 1):
        for l in range(-(-n // 2), n + 1):
            if l <= j:
                continue
            if indexing == "moved":
                a, b = j - 1, l - 1
            elif indexing == "shifted":
                if l >= n:
                    continue
                a, b = j, l
            else:
                raise ValueError(f"unknown indexing {indexing!r}")
            if zsum[b] == zsum[a]:
                best = max(best, csum[b] - csum[a])
    return float(n * n * np.exp(best)) if np.isfinite(best) else 0.0


def exact_pi_A(env: Environment, n: int | None = None, k: int = 1) -> float:
    pi = stationary(env, n, k)
    return pi.mass(event_A_mask(pi.n, k))
