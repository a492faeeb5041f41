import pytest

from pulsesim.engine import NS_PER_MS, NS_PER_SEC, RngState
from pulsesim.jvm import GcModel, build_pause_schedule, g1_like, next_pause, none_model, zgc_like


def test_g1_preset_reaches_213ms_with_32gb_heap():
    model = g1_like(heap_gb=32)
    assert model.pause_max_ns >= 213 * NS_PER_MS


def test_zgc_preset_is_sub_millisecond():
    model = zgc_like()
    assert model.pause_max_ns < NS_PER_MS


def test_none_schedules_nothing():
    sched = build_pause_schedule(none_model(), RngState(1).stream("gc"), 600 * NS_PER_SEC)
    assert sched.windows() == []
    with pytest.raises(ValueError):
        next_pause(none_model(), RngState(1).stream("gc"))


def test_g1_long_run_max_pause_reaches_200ms():
    model = g1_like(heap_gb=32, mean_interval_ns=5 * NS_PER_SEC, tail_frac=0.05)
    sched = build_pause_schedule(model, RngState(99).stream("gc"), 3600 * NS_PER_SEC)
    longest = max(end - start for start, end in sched.windows())
    assert longest >= 200 * NS_PER_MS


def test_zgc_long_run_every_pause_sub_ms():
    model = zgc_like()
    sched = build_pause_schedule(model, RngState(5).stream("gc"), 3600 * NS_PER_SEC)
    assert sched.windows()
    assert all(end - start < NS_PER_MS for start, end in sched.windows())


def test_pause_lengths_clamped_to_max():
    model = g1_like(heap_gb=32)
    rng = RngState(11).stream("gc")
    for _ in range(4000):
        _, length = next_pause(model, rng)
        assert 0 < length <= model.pause_max_ns


def test_windows_never_overlap():
    model = g1_like(mean_interval_ns=NS_PER_SEC, tail_frac=0.2)
    sched = build_pause_schedule(model, RngState(2).stream("gc"), 300 * NS_PER_SEC)
    windows = sched.windows()
    for (s1, e1), (s2, e2) in zip(windows, windows[1:]):
        assert e1 <= s2


def test_schedule_determinism():
    model = g1_like()
    a = build_pause_schedule(model, RngState(8).stream("gc/x"), 600 * NS_PER_SEC)
    b = build_pause_schedule(model, RngState(8).stream("gc/x"), 600 * NS_PER_SEC)
    assert a.windows() == b.windows()


def test_model_validation():
    with pytest.raises(ValueError):
        GcModel(kind="shenandoah")
    with pytest.raises(ValueError):
        GcModel(kind="g1_like", pause_p50_ns=0, pause_max_ns=1, mean_interval_ns=1)
