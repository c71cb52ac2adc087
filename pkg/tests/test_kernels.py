import numpy as np

from sepmix import _kernels as K
from sepmix.graphical import stream_key


def test_merge_equals_per_site_streams():
    key = stream_key(17)
    first, n, h = -3, 40, 30.0
    times, idx, heads, marks = K.stream_events(key, first, n, h)
    cols = [[], [], [], []]
    for i in range(n):
        t, _, hd, mk = K.stream_events(key, first + i, 1, h)
        for c, v in zip(cols, (t, np.full(t.size, i), hd, mk)):
            c.append(v)
    rt, ri, rh, rm = (np.concatenate(c) for c in cols)
    order = np.lexsort((ri, rt))
    assert np.array_equal(times, rt[order]) and np.array_equal(idx, ri[order])
    assert np.array_equal(heads, rh[order]) and np.array_equal(marks, rm[order])


def test_gap_law_is_rate_two():
    key = stream_key(3)
    t, idx, _, _ = K.stream_events(key, 1, 1, 20_000.0)
    gaps = np.diff(np.concatenate(([0.0], t)))
    assert abs(gaps.mean() - 0.5) < 4 * 0.5 / np.sqrt(gaps.size)
    # exponential: the coefficient of variation is one
    assert abs(gaps.std() / gaps.mean() - 1) < 0.03


def test_resumed_coalescence_matches_one_shot():
    rates = np.linspace(0.55, 0.9, 24)
    for seed in range(20):
        key = stream_key(seed)
        t_once, _ = K.coalescence_time(key, 1, rates, 12, 1e6, 10**8)
        st, lo, hi, acc = K.coalescence_start(key, 1, 24, 12)
        h, t = 1.0, np.inf
        while np.isinf(t):
            t = K.coalescence_resume(st, lo, hi, acc, rates, h, 10**8)
            h *= 1.3
        assert t == t_once
        assert np.array_equal(lo, hi)
