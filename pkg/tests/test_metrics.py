import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pulsesim.engine import NS_PER_MS
from pulsesim.metrics import EmptyHistogramError, LatencyHistogram


def hist_of(values):
    h = LatencyHistogram()
    for v in values:
        h.record(v)
    return h


def sorted_oracle(values, q):
    xs = sorted(values)
    rank = max(1, math.ceil(q * len(xs)))
    return xs[rank - 1]


def test_record_zero_goes_to_lowest_bucket():
    h = hist_of([0])
    assert h.nonzero_buckets()[0][0] == 0
    assert h.quantile(0.5) == 0.0


def test_single_value_dominates_all_quantiles():
    h = hist_of([3 * NS_PER_MS])
    for q in (0.0, 0.5, 0.99, 1.0):
        assert abs(h.quantile(q) - 3 * NS_PER_MS) / (3 * NS_PER_MS) < 0.01


def test_uniform_million_micro_range_median():
    # 1..1000 us uniformly: P50 within 1% of 500 us
    values = [v * 1000 for v in range(1, 1001)]
    h = hist_of(values)
    assert abs(h.quantile(0.5) - 500_000) / 500_000 < 0.01


def test_quantiles_against_sorted_oracle_lognormal():
    rng = np.random.default_rng(1234)
    values = [int(v) for v in rng.lognormal(math.log(5 * NS_PER_MS), 0.4, 10_000)]
    h = hist_of(values)
    for q in (0.5, 0.95, 0.99, 0.999):
        exact = sorted_oracle(values, q)
        assert abs(h.quantile(q) - exact) / exact < 0.01, q


def test_q1_tracks_max_and_q0_tracks_min():
    values = [1500, 2500, 90 * NS_PER_MS]
    h = hist_of(values)
    assert h.quantile(1.0) <= h.max
    assert abs(h.quantile(1.0) - 90 * NS_PER_MS) / (90 * NS_PER_MS) < 0.01
    assert abs(h.quantile(0.0) - 1500) / 1500 < 0.01


def test_max_bounds_every_quantile():
    rng = np.random.default_rng(7)
    h = hist_of([int(v) for v in rng.lognormal(12, 1.0, 5000)])
    for q in np.linspace(0, 1, 23):
        assert h.quantile(float(q)) <= h.max


def test_empty_histogram_signals_distinctly():
    with pytest.raises(EmptyHistogramError):
        LatencyHistogram().quantile(0.5)


def test_overflow_clamps_to_top_bucket():
    h = hist_of([250 * 10**9])  # 250 s, above the 100 s range
    assert h.overflow == 1
    assert h.count == 1
    assert h.quantile(1.0) <= 250 * 10**9


def test_negative_rejected():
    with pytest.raises(ValueError):
        LatencyHistogram().record(-1)


@settings(max_examples=40)
@given(st.lists(st.integers(0, 10**9), min_size=1, max_size=300))
def test_quantile_monotonicity(values):
    h = hist_of(values)
    qs = [0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99, 1.0]
    got = [h.quantile(q) for q in qs]
    assert got == sorted(got)


@settings(max_examples=25)
@given(
    st.lists(st.integers(0, 10**8), max_size=80),
    st.lists(st.integers(0, 10**8), max_size=80),
    st.lists(st.integers(0, 10**8), max_size=80),
)
def test_merge_associativity(a, b, c):
    ha, hb, hc = hist_of(a), hist_of(b), hist_of(c)
    left = ha.merge(hb).merge(hc)
    right = ha.merge(hb.merge(hc))
    assert np.array_equal(left.counts, right.counts)
    assert (left.count, left.total, left.max, left.min) == (
        right.count,
        right.total,
        right.max,
        right.min,
    )
    if left.count:
        for q in (0.5, 0.9, 0.99):
            assert left.quantile(q) == right.quantile(q)


def test_merge_matches_combined_recording():
    a = [1000, 2000, 3000]
    b = [50 * NS_PER_MS, 60 * NS_PER_MS]
    merged = hist_of(a).merge(hist_of(b))
    combined = hist_of(a + b)
    assert np.array_equal(merged.counts, combined.counts)
    assert merged.quantile(0.5) == combined.quantile(0.5)
