"""Compiled inner loops.

Every site owns an independent random stream: a splitmix64 sequence whose
starting state is a hash of ``(key, site)``.  A site's stream is consumed in
pairs of 64-bit words: an exponential(2) waiting time to its next clock ring,
then one word whose top bit is the fair coin (HEAD when set) and whose next
53 bits give the uniform mark compared against ``omega``.  Because a site's
rings depend only on ``(key, site)``, the same key drives the same clocks
for every window that contains the site and for every horizon.

Rings of all sites are merged in time order slab by slab: each site's stream
is advanced to the end of the slab, then a counting sort followed by an
insertion pass orders the slab by ``(time, site)``.

Conventions: arrays are 0-based; ``first_site`` is the label of index 0.
"""

import math

import numba as nb
import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S1 = np.uint64(1)
_S11 = np.uint64(11)
_S27 = np.uint64(27)
_S30 = np.uint64(30)
_S31 = np.uint64(31)
_S63 = np.uint64(63)
_SITE_BIAS = 1 << 40  # keeps negative site labels positive before hashing
_INV53 = 1.0 / 9007199254740992.0
SLAB_EVENTS = 256.0  # mean rings per slab

jit = nb.njit(cache=True, nogil=True)


@nb.njit(cache=True, inline="always")
def mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@nb.njit(cache=True, inline="always")
def site_state(key, site):
    return mix64(key ^ mix64(np.uint64(site + _SITE_BIAS) * _GOLDEN))


@nb.njit(cache=True, inline="always")
def next_word(states, i):
    s = states[i] + _GOLDEN
    states[i] = s
    return mix64(s)


@nb.njit(cache=True, inline="always")
def _unit(w):
    return np.float64(np.int64(w >> _S11)) * _INV53


@nb.njit(cache=True, inline="always")
def _gap(states, i):
    return -math.log1p(-_unit(next_word(states, i))) * 0.5


@nb.njit(cache=True, inline="always")
def decode(w):
    """Coin and mark carried by one word."""
    return (w >> _S63) == _S1, _unit(w << _S1)


# --------------------------------------------------------------------------
# merged event stream
# --------------------------------------------------------------------------


@jit
def stream_init(key, first_site, n):
    states = np.empty(n, dtype=np.uint64)
    next_t = np.empty(n, dtype=np.float64)
    for i in range(n):
        states[i] = site_state(key, first_site + i)
        next_t[i] = _gap(states, i)
    cap = int(2.0 * SLAB_EVENTS + 12.0 * math.sqrt(SLAB_EVENTS)) + 64
    raw_t = np.empty(cap, dtype=np.float64)
    raw_s = np.empty(cap, dtype=np.int64)
    raw_w = np.empty(cap, dtype=np.uint64)
    buf_t = np.empty(cap, dtype=np.float64)
    buf_s = np.empty(cap, dtype=np.int64)
    buf_w = np.empty(cap, dtype=np.uint64)
    bucket = np.empty(cap + 1, dtype=np.int64)
    ctrl = np.zeros(2, dtype=np.int64)  # read position, slab size
    fctrl = np.array([0.0, SLAB_EVENTS / (2.0 * n)])  # next slab start, width
    return (states, next_t, raw_t, raw_s, raw_w, buf_t, buf_s, buf_w, bucket, ctrl, fctrl)


@jit
def refill(st):
    states, next_t, raw_t, raw_s, raw_w, buf_t, buf_s, buf_w, bucket, ctrl, fctrl = st
    n = states.shape[0]
    cap = raw_t.shape[0]
    m = 0
    while m == 0:
        t0 = fctrl[0]
        t1 = t0 + fctrl[1]
        for i in range(n):
            t = next_t[i]
            while t < t1:
                if m == cap:
                    raise RuntimeError("event slab overflow")
                raw_t[m] = t
                raw_s[m] = i
                raw_w[m] = next_word(states, i)
                m += 1
                t += _gap(states, i)
            next_t[i] = t
        fctrl[0] = t1
    # counting sort on time buckets, then one insertion pass
    bucket[: m + 1] = 0
    scale = m / (t1 - t0)
    for j in range(m):
        b = min(int((raw_t[j] - t0) * scale), m - 1)
        bucket[b + 1] += 1
    for b in range(m):
        bucket[b + 1] += bucket[b]
    for j in range(m):
        b = min(int((raw_t[j] - t0) * scale), m - 1)
        p = bucket[b]
        bucket[b] += 1
        buf_t[p] = raw_t[j]
        buf_s[p] = raw_s[j]
        buf_w[p] = raw_w[j]
    for j in range(1, m):
        t = buf_t[j]
        s = buf_s[j]
        w = buf_w[j]
        p = j - 1
        while p >= 0 and (buf_t[p] > t or (buf_t[p] == t and buf_s[p] > s)):
            buf_t[p + 1] = buf_t[p]
            buf_s[p + 1] = buf_s[p]
            buf_w[p + 1] = buf_w[p]
            p -= 1
        buf_t[p + 1] = t
        buf_s[p + 1] = s
        buf_w[p + 1] = w
    ctrl[0] = 0
    ctrl[1] = m


@nb.njit(cache=True, inline="always")
def stream_views(st):
    """Buffers read on every ring: ``(ctrl, times, sites, words)``.

    Hot loops hold these directly and call ``refill(st)`` only when
    ``ctrl[0] == ctrl[1]``; passing the whole state tuple per ring costs
    reference counting on every array in it.
    """
    return st[9], st[5], st[6], st[7]


@nb.njit(cache=True, inline="always")
def stream_peek(ctrl, bt):
    return bt[ctrl[0]]


@nb.njit(cache=True, inline="always")
def stream_next(ctrl, bt, bs, bw):
    """Pop the next ring as ``(time, site_index, head, mark)``."""
    p = ctrl[0]
    ctrl[0] = p + 1
    head, mark = decode(bw[p])
    return bt[p], bs[p], head, mark


@jit
def stream_events(key, first_site, n, horizon):
    st = stream_init(key, first_site, n)
    ctrl, bt, bs, bw = stream_views(st)
    cap = int(2.0 * n * horizon + 10.0 * math.sqrt(2.0 * n * horizon + 1.0)) + 16
    times = np.empty(cap, dtype=np.float64)
    sites = np.empty(cap, dtype=np.int64)
    heads = np.empty(cap, dtype=np.bool_)
    marks = np.empty(cap, dtype=np.float64)
    m = 0
    while True:
        if ctrl[0] == ctrl[1]:
            refill(st)
        if stream_peek(ctrl, bt) > horizon:
            break
        if m == cap:
            cap *= 2
            times = _grow(times, cap)
            sites = _grow(sites, cap)
            heads = _grow(heads, cap)
            marks = _grow(marks, cap)
        t, i, head, mark = stream_next(ctrl, bt, bs, bw)
        times[m] = t
        sites[m] = i
        heads[m] = head
        marks[m] = mark
        m += 1
    return times[:m].copy(), sites[:m].copy(), heads[:m].copy(), marks[:m].copy()


@jit
def _grow(a, cap):
    b = np.empty(cap, dtype=a.dtype)
    b[: a.shape[0]] = a
    return b


# --------------------------------------------------------------------------
# exclusion updates
# --------------------------------------------------------------------------


@nb.njit(cache=True, inline="always")
def sep_apply(eta, rates, i, head, mark):
    """Apply one ring at index ``i``; returns +1/-1 for a right/left move, else 0."""
    n = eta.shape[0]
    if head:
        if i < n - 1 and mark <= rates[i] and eta[i] == 1 and eta[i + 1] == 0:
            eta[i] = 0
            eta[i + 1] = 1
            return 1
    else:
        if i > 0 and mark > rates[i] and eta[i] == 1 and eta[i - 1] == 0:
            eta[i] = 0
            eta[i - 1] = 1
            return -1
    return 0


@nb.njit(cache=True, inline="always")
def _edge_of(i, head):
    return i if head else i - 1


@nb.njit(cache=True, inline="always")
def _censored(blocked, bps, ptr, i, head, n):
    if blocked.shape[0] == 0:
        return False
    e = _edge_of(i, head)
    if e < 0 or e >= n - 1:
        return False
    return blocked[ptr, e]


@nb.njit(cache=True, inline="always")
def _advance(bps, ptr, t):
    m = bps.shape[0] - 1
    while ptr < m - 1 and t >= bps[ptr + 1]:
        ptr += 1
    return ptr


@jit
def evolve_events(eta, rates, times, sites, heads, marks, t_end, blocked, bps):
    """Evolve ``eta`` in place through pre-drawn events up to ``t_end``."""
    n = eta.shape[0]
    ptr = 0
    for j in range(times.shape[0]):
        t = times[j]
        if t > t_end:
            break
        i = sites[j]
        if i < 0 or i >= n:
            continue
        if blocked.shape[0] > 0:
            ptr = _advance(bps, ptr, t)
            if _censored(blocked, bps, ptr, i, heads[j], n):
                continue
        sep_apply(eta, rates, i, heads[j], marks[j])
    return eta


@jit
def evolve_lazy(key, first_site, eta, rates, t_end, blocked, bps):
    n = eta.shape[0]
    st = stream_init(key, first_site, n)
    ctrl, bt, bs, bw = stream_views(st)
    ptr = 0
    while True:
        if ctrl[0] == ctrl[1]:
            refill(st)
        if stream_peek(ctrl, bt) > t_end:
            break
        t, i, head, mark = stream_next(ctrl, bt, bs, bw)
        if blocked.shape[0] > 0:
            ptr = _advance(bps, ptr, t)
            if _censored(blocked, bps, ptr, i, head, n):
                continue
        sep_apply(eta, rates, i, head, mark)
    return eta


@jit
def evolve_batch(keys, first_site, eta0, rates, t_end, blocked, bps):
    r = keys.shape[0]
    out = np.empty((r, eta0.shape[0]), dtype=np.uint8)
    for j in range(r):
        eta = eta0.copy()
        evolve_lazy(keys[j], first_site, eta, rates, t_end, blocked, bps)
        out[j] = eta
    return out


@jit
def leftmost_path_batch(keys, first_site, eta0, rates, grid, blocked, bps):
    """Index of the leftmost particle at each time in ``grid`` (sorted)."""
    r = keys.shape[0]
    n = eta0.shape[0]
    ng = grid.shape[0]
    out = np.empty((r, ng), dtype=np.int64)
    t_end = grid[-1]
    for j in range(r):
        eta = eta0.copy()
        st = stream_init(keys[j], first_site, n)
        ctrl, bt, bs, bw = stream_views(st)
        ptr = 0
        g = 0
        left = 0
        while eta[left] == 0:
            left += 1
        while True:
            if ctrl[0] == ctrl[1]:
                refill(st)
            while g < ng and grid[g] < stream_peek(ctrl, bt):
                out[j, g] = left
                g += 1
            if stream_peek(ctrl, bt) > t_end:
                break
            t, i, head, mark = stream_next(ctrl, bt, bs, bw)
            if blocked.shape[0] > 0:
                ptr = _advance(bps, ptr, t)
                if _censored(blocked, bps, ptr, i, head, n):
                    continue
            if sep_apply(eta, rates, i, head, mark) != 0 and i == left:
                left = max(i - 1, 0)
                while eta[left] == 0:
                    left += 1
    return out


# --------------------------------------------------------------------------
# coupled trajectories
# --------------------------------------------------------------------------


@jit
def _prefix_leq(a, b):
    sa = 0
    sb = 0
    for x in range(a.shape[0]):
        sa += a[x]
        sb += b[x]
        if sa > sb:
            return False
    return True


@jit
def coupled_events(etas, rates, times, sites, heads, marks, t_end, pairs):
    """Evolve every row of ``etas`` (row-wise environments in ``rates``) on the
    same events; count event times where a listed pair ``(lo, hi)`` breaks
    ``etas[lo] <= etas[hi]``."""
    m, n = etas.shape
    violations = 0
    for j in range(times.shape[0]):
        if times[j] > t_end:
            break
        i = sites[j]
        if i < 0 or i >= n:
            continue
        for r in range(m):
            sep_apply(etas[r], rates[r], i, heads[j], marks[j])
        for p in range(pairs.shape[0]):
            if not _prefix_leq(etas[pairs[p, 0]], etas[pairs[p, 1]]):
                violations += 1
    return violations


@jit
def coupled_extremes_violations(keys, rates_lo, rates_hi, k, horizon):
    """Per key: ground state in ``rates_lo`` versus top state in ``rates_hi``;
    returns order violations summed over all event times."""
    n = rates_lo.shape[0]
    total = 0
    for j in range(keys.shape[0]):
        lo = np.zeros(n, dtype=np.uint8)
        hi = np.zeros(n, dtype=np.uint8)
        lo[n - k :] = 1
        hi[:k] = 1
        st = stream_init(keys[j], 1, n)
        ctrl, bt, bs, bw = stream_views(st)
        while True:
            if ctrl[0] == ctrl[1]:
                refill(st)
            if stream_peek(ctrl, bt) > horizon:
                break
            t, i, head, mark = stream_next(ctrl, bt, bs, bw)
            sep_apply(lo, rates_lo, i, head, mark)
            sep_apply(hi, rates_hi, i, head, mark)
            if not _prefix_leq(lo, hi):
                total += 1
    return total


@jit
def coalescence_time(key, first_site, rates, k, horizon, max_events):
    """First ring at which the chains from top and ground state agree.

    Returns ``(time, events)``; ``time`` is ``inf`` if they have not met by
    ``horizon`` or after ``max_events`` rings.  The coupling keeps the two
    chains ordered, so they agree exactly when their particle position sums
    do.
    """
    n = rates.shape[0]
    hi = np.zeros(n, dtype=np.uint8)
    lo = np.zeros(n, dtype=np.uint8)
    hi[:k] = 1
    lo[n - k :] = 1
    gap = k * (n - k)  # sum of positions in lo minus that in hi
    if gap == 0:
        return 0.0, 0
    st = stream_init(key, first_site, n)
    ctrl, bt, bs, bw = stream_views(st)
    events = 0
    while True:
        if ctrl[0] == ctrl[1]:
            refill(st)
        if stream_peek(ctrl, bt) > horizon or events >= max_events:
            break
        t, i, head, mark = stream_next(ctrl, bt, bs, bw)
        events += 1
        gap += sep_apply(lo, rates, i, head, mark) - sep_apply(hi, rates, i, head, mark)
        if gap == 0:
            return t, events
    return np.inf, events


@jit
def coalescence_batch(keys, first_site, rates, k, horizon, max_events):
    times = np.empty(keys.shape[0], dtype=np.float64)
    events = np.empty(keys.shape[0], dtype=np.int64)
    for j in range(keys.shape[0]):
        times[j], events[j] = coalescence_time(keys[j], first_site, rates, k, horizon, max_events)
    return times, events


@jit
def coalescence_start(key, first_site, n, k):
    """Resumable coalescence run: ``(stream, lo, hi, acc)`` with
    ``acc = [position-sum gap, rings used]``."""
    hi = np.zeros(n, dtype=np.uint8)
    lo = np.zeros(n, dtype=np.uint8)
    hi[:k] = 1
    lo[n - k :] = 1
    acc = np.array([k * (n - k), 0], dtype=np.int64)
    return stream_init(key, first_site, n), lo, hi, acc


@jit
def coalescence_resume(st, lo, hi, acc, rates, horizon, max_events):
    """Continue a run from :func:`coalescence_start` up to ``horizon``.

    Returns the meeting time or ``inf``; rings after ``horizon`` stay queued.
    """
    if acc[0] == 0:
        return 0.0
    ctrl, bt, bs, bw = stream_views(st)
    while True:
        if ctrl[0] == ctrl[1]:
            refill(st)
        if stream_peek(ctrl, bt) > horizon or acc[1] >= max_events:
            return np.inf
        t, i, head, mark = stream_next(ctrl, bt, bs, bw)
        acc[1] += 1
        acc[0] += sep_apply(lo, rates, i, head, mark) - sep_apply(hi, rates, i, head, mark)
        if acc[0] == 0:
            return t


@jit
def hitting_time(key, first_site, rates, eta0, target, horizon, max_events):
    """First ring at which the chain from ``eta0`` equals ``target``.

    Also reports whether a particle ever sat on the first window site and
    whether a hole ever sat on the last one.
    """
    n = rates.shape[0]
    eta = eta0.copy()
    diff = 0
    for x in range(n):
        if eta[x] != target[x]:
            diff += 1
    left_touch = eta[0] == 1
    right_touch = eta[n - 1] == 0
    if diff == 0:
        return 0.0, left_touch, right_touch
    st = stream_init(key, first_site, n)
    ctrl, bt, bs, bw = stream_views(st)
    events = 0
    while True:
        if ctrl[0] == ctrl[1]:
            refill(st)
        if stream_peek(ctrl, bt) > horizon or events >= max_events:
            break
        t, i, head, mark = stream_next(ctrl, bt, bs, bw)
        events += 1
        j = i + 1 if head else i - 1
        if j < 0 or j >= n:
            continue
        before = (1 if eta[i] != target[i] else 0) + (1 if eta[j] != target[j] else 0)
        if sep_apply(eta, rates, i, head, mark) != 0:
            after = (1 if eta[i] != target[i] else 0) + (1 if eta[j] != target[j] else 0)
            diff += after - before
            if eta[0] == 1:
                left_touch = True
            if eta[n - 1] == 0:
                right_touch = True
            if diff == 0:
                return t, left_touch, right_touch
    return np.inf, left_touch, right_touch


@jit
def hitting_batch(keys, first_site, rates, eta0, target, horizon, max_events):
    r = keys.shape[0]
    times = np.empty(r, dtype=np.float64)
    left = np.empty(r, dtype=np.bool_)
    right = np.empty(r, dtype=np.bool_)
    for j in range(r):
        times[j], left[j], right[j] = hitting_time(
            keys[j], first_site, rates, eta0, target, horizon, max_events
        )
    return times, left, right


# --------------------------------------------------------------------------
# second class particles
# --------------------------------------------------------------------------

# priority of the values 0, 1, 2: first class > second class > hole
_PRIO = np.array([0, 2, 1], dtype=np.int64)


@jit
def second_class_events(xi, rates, times, sites, heads, marks, t_end):
    n = xi.shape[0]
    touched = xi[0] == 1 or xi[n - 1] == 1
    for j in range(times.shape[0]):
        if times[j] > t_end:
            break
        i = sites[j]
        if i < 0 or i >= n:
            continue
        if heads[j]:
            if i < n - 1 and marks[j] <= rates[i] and _PRIO[xi[i]] > _PRIO[xi[i + 1]]:
                xi[i], xi[i + 1] = xi[i + 1], xi[i]
        else:
            if i > 0 and marks[j] > rates[i] and _PRIO[xi[i]] > _PRIO[xi[i - 1]]:
                xi[i], xi[i - 1] = xi[i - 1], xi[i]
        if xi[0] == 1 or xi[n - 1] == 1:
            touched = True
    return touched


@jit
def second_class_batch(keys, first_site, xi0, rates, t_end):
    r = keys.shape[0]
    n = xi0.shape[0]
    out = np.empty((r, n), dtype=np.uint8)
    touched = np.zeros(r, dtype=np.bool_)
    for j in range(r):
        xi = xi0.copy()
        st = stream_init(keys[j], first_site, n)
        ctrl, bt, bs, bw = stream_views(st)
        flag = xi[0] == 1 or xi[n - 1] == 1
        while True:
            if ctrl[0] == ctrl[1]:
                refill(st)
            if stream_peek(ctrl, bt) > t_end:
                break
            t, i, head, mark = stream_next(ctrl, bt, bs, bw)
            if head:
                if i < n - 1 and mark <= rates[i] and _PRIO[xi[i]] > _PRIO[xi[i + 1]]:
                    xi[i], xi[i + 1] = xi[i + 1], xi[i]
            else:
                if i > 0 and mark > rates[i] and _PRIO[xi[i]] > _PRIO[xi[i - 1]]:
                    xi[i], xi[i - 1] = xi[i - 1], xi[i]
            if xi[0] == 1 or xi[n - 1] == 1:
                flag = True
        out[j] = xi
        touched[j] = flag
    return out, touched


# --------------------------------------------------------------------------
# boundary driven chain
# --------------------------------------------------------------------------
# Stream index 0 is the creation clock, index i in 1..M is site i.


@nb.njit(cache=True, inline="always")
def boundary_apply(sigma, i, head, mark, c):
    """One ring of the boundary chain; returns -1 on annihilation, +1 on
    creation, else 0.  ``sigma`` holds sites 1..M at indices 0..M-1."""
    m = sigma.shape[0]
    if i == 0:
        if head and sigma[0] == 0:
            sigma[0] = 1
            return 1
        return 0
    x = i - 1
    if head:
        if x == m - 1:
            if sigma[x] == 1:
                sigma[x] = 0
                return -1
        elif mark <= 0.5 + c and sigma[x] == 1 and sigma[x + 1] == 0:
            sigma[x] = 0
            sigma[x + 1] = 1
    else:
        if x > 0 and mark > 0.5 + c and sigma[x] == 1 and sigma[x - 1] == 0:
            sigma[x] = 0
            sigma[x - 1] = 1
    return 0


@jit
def boundary_run(key, sigma0, c, horizon, sample_times):
    """Simulate to ``horizon``; returns final state, annihilation count,
    the count at each sample time and snapshots at the sample times."""
    m = sigma0.shape[0]
    sigma = sigma0.copy()
    st = stream_init(key, 0, m + 1)
    ctrl, bt, bs, bw = stream_views(st)
    ns = sample_times.shape[0]
    snaps = np.empty((ns, m), dtype=np.uint8)
    z_at = np.empty(ns, dtype=np.int64)
    z = 0
    g = 0
    while True:
        if ctrl[0] == ctrl[1]:
            refill(st)
        while g < ns and sample_times[g] < stream_peek(ctrl, bt):
            snaps[g] = sigma
            z_at[g] = z
            g += 1
        if stream_peek(ctrl, bt) > horizon:
            break
        t, i, head, mark = stream_next(ctrl, bt, bs, bw)
        if boundary_apply(sigma, i, head, mark, c) < 0:
            z += 1
    return sigma, z, z_at, snaps


@jit
def boundary_count_batch(keys, sigma0s, c, horizon):
    r = keys.shape[0]
    out = np.empty(r, dtype=np.int64)
    empty = np.empty(0, dtype=np.float64)
    for j in range(r):
        out[j] = boundary_run(keys[j], sigma0s[j], c, horizon, empty)[1]
    return out


# --------------------------------------------------------------------------
# modified exclusion process with its coupled boundary chain
# --------------------------------------------------------------------------


@jit
def modified_run(key, xi0, rates, xw, yw, c, horizon, sample_times):
    """Modified process on ``[N]`` with barrier interval ``[xw, yw]`` (0-based).

    ``rates`` is the flattened environment.  A boundary chain ``sigma`` on the
    interval is driven by the same rings: interval rings act on it directly
    and the creation clock is the HEAD ring of the rightmost particle left of
    ``xw``.  Returns ``(xi, tau_star, crossings, crossings_total, annihilations,
    mismatch, suppressed, leftmost)`` where ``crossings`` (moves out of
    ``yw``) and ``annihilations`` are counted up to ``min(tau_star, horizon)``,
    ``mismatch`` counts rings before ``tau_star`` after which the interval
    differs from ``sigma`` and ``leftmost`` samples the leftmost particle
    index at ``sample_times``.
    """
    n = xi0.shape[0]
    m = yw - xw + 1
    xi = xi0.copy()
    sigma = xi0[xw : yw + 1].copy()
    left_count = 0
    for x in range(xw):
        left_count += xi[x]
    tau = 0.0 if left_count == 0 else np.inf
    crossings = 0
    crossings_total = 0
    annihilations = 0
    mismatch = 0
    suppressed = 0
    ns = sample_times.shape[0]
    leftmost = np.empty(ns, dtype=np.int64)
    g = 0
    st = stream_init(key, 1, n)
    ctrl, bt, bs, bw = stream_views(st)
    while True:
        if ctrl[0] == ctrl[1]:
            refill(st)
        while g < ns and sample_times[g] < stream_peek(ctrl, bt):
            lm = 0
            while lm < n and xi[lm] == 0:
                lm += 1
            leftmost[g] = lm
            g += 1
        if stream_peek(ctrl, bt) > horizon:
            break
        t, i, head, mark = stream_next(ctrl, bt, bs, bw)
        coupled = left_count > 0
        sigma_site = -1
        if xw <= i <= yw:
            sigma_site = i - xw + 1
        if i < xw:
            if head and xi[i] == 1:
                rightmost_left = True
                for y in range(i + 1, xw):
                    if xi[y] == 1:
                        rightmost_left = False
                        break
                if rightmost_left:
                    sigma_site = 0
                if rightmost_left and xi[xw] == 0:
                    # rule 1: jump straight onto the interval
                    xi[i] = 0
                    xi[xw] = 1
                    left_count -= 1
                    if left_count == 0 and coupled:
                        tau = t
                else:
                    sep_apply(xi, rates, i, head, mark)
            else:
                sep_apply(xi, rates, i, head, mark)
        elif i == xw and not head:
            pass  # no outflow through the left end of the interval
        elif i == yw and head:
            if xi[yw] == 1:
                # rule 2: reinsert at the rightmost empty site
                r = n - 1
                while r > yw and xi[r] == 1:
                    r -= 1
                if r > yw:
                    xi[yw] = 0
                    xi[r] = 1
                    crossings_total += 1
                    if coupled:
                        crossings += 1
                else:
                    suppressed += 1
        elif i == yw + 1 and not head:
            pass  # rule 3
        else:
            sep_apply(xi, rates, i, head, mark)
        if coupled:
            if sigma_site >= 0:
                if boundary_apply(sigma, sigma_site, head, mark, c) < 0:
                    annihilations += 1
            for x in range(m):
                if xi[xw + x] != sigma[x]:
                    mismatch += 1
                    break
    return xi, tau, crossings, crossings_total, annihilations, mismatch, suppressed, leftmost
