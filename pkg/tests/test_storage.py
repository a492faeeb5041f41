import statistics

import pytest

from pulsesim.engine import NS_PER_MS, NS_PER_SEC, RngState
from pulsesim.storage import (
    GIB,
    BlockLayer,
    DeviceModel,
    OsTunables,
    sample_fsync,
)


def make_layer(ram_gib=64, ratio=40, bg=10, drain=GIB, **kw):
    return BlockLayer(
        "host-0",
        total_ram_bytes=ram_gib * GIB,
        tunables=OsTunables(dirty_ratio=ratio, dirty_background_ratio=bg),
        drain_rate_bytes_per_s=drain,
        **kw,
    )


def draws(device, layer, n, now=0, seed=1):
    rng = RngState(seed).stream("fsync/test")
    return [sample_fsync(device, layer, rng, now)[0] for _ in range(n)]


def test_tier_presets():
    nvme = DeviceModel.make("d", "new_nvme", "host-0")
    assert nvme.fsync_p50_ns == 20_000
    ssd = DeviceModel.make("d", "worn_ssd", "host-0")
    assert ssd.fsync_p50_ns == 5_100_000
    worn = DeviceModel.make("d", "worn_nvme", "host-0")
    assert 2_650_000 <= worn.fsync_p50_ns <= 6_610_000
    with pytest.raises(ValueError):
        DeviceModel.make("d", "custom", "host-0")
    custom = DeviceModel.make("d", "custom", "host-0", fsync_p50_ns=123)
    assert custom.fsync_p50_ns == 123


def test_new_nvme_median_near_20us():
    dev = DeviceModel.make("d", "new_nvme", "host-0")
    med = statistics.median(draws(dev, make_layer(), 10_000))
    assert abs(med - 20_000) / 20_000 < 0.10


def test_worn_ssd_median_near_5_1_ms():
    dev = DeviceModel.make("d", "worn_ssd", "host-0")
    med = statistics.median(draws(dev, make_layer(), 10_000))
    assert abs(med - 5_100_000) / 5_100_000 < 0.10


def test_contended_draws_all_in_degraded_band():
    layer = make_layer()
    layer.begin_writeback_burst(3 * GIB, now=0)
    dev = DeviceModel.make("d", "new_nvme", "host-0")
    for v in draws(dev, layer, 2000, now=NS_PER_SEC):
        assert 15 * NS_PER_MS <= v <= 22 * NS_PER_MS


def test_accumulate_zero_bytes_is_noop():
    layer = make_layer()
    layer.accumulate_dirty(0, now=0)
    assert layer.dirty_bytes == 0
    assert not layer.draining


def test_background_drain_threshold_arithmetic():
    # 1 GiB dirty vs 1% of 64 GiB (0.64 GiB): drain active
    layer = make_layer(ram_gib=64, bg=1, ratio=40)
    layer.accumulate_dirty(GIB, now=0)
    assert layer.draining
    # with 10%: 1 GiB < 6.4 GiB, no drain
    layer10 = make_layer(ram_gib=64, bg=10, ratio=40)
    layer10.accumulate_dirty(GIB, now=0)
    assert not layer10.draining


def test_background_drain_decays_without_contention():
    # default writeback cadence is 5 s; give it two cadence steps
    layer = make_layer(ram_gib=64, bg=1, ratio=40, drain=GIB)
    layer.accumulate_dirty(20 * GIB, now=0)
    layer.accumulate_dirty(0, now=10 * NS_PER_SEC)
    assert layer.dirty_bytes == 10 * GIB  # 10 s at 1 GiB/s drained
    assert not layer.contended(10 * NS_PER_SEC)


def test_background_drain_stops_at_threshold():
    layer = make_layer(ram_gib=64, bg=1, ratio=40, drain=GIB)
    layer.accumulate_dirty(2 * GIB, now=0)
    layer.accumulate_dirty(0, now=3600 * NS_PER_SEC)
    assert layer.dirty_bytes == layer.background_threshold


def test_background_drain_partial_cadence_progress_kept():
    layer = make_layer(ram_gib=64, bg=1, ratio=40, drain=GIB)
    layer.accumulate_dirty(20 * GIB, now=0)
    # many sub-cadence settles must still add up to full cadence steps
    for ms in range(0, 10_001, 500):
        layer.accumulate_dirty(0, now=ms * NS_PER_MS)
    assert layer.dirty_bytes == 10 * GIB


def test_burst_with_nothing_to_flush_has_no_window():
    layer = make_layer()
    assert layer.begin_writeback_burst(0, now=0) == 0
    assert not layer.contended(0)


def test_burst_window_uncapped():
    # 3 GiB at 1 GiB/s with a 25.6 GiB cap: 3 s window
    layer = make_layer(ram_gib=64, ratio=40)
    window = layer.begin_writeback_burst(3 * GIB, now=0)
    assert window == 3 * NS_PER_SEC
    assert layer.dirty_bytes == 0


def test_burst_window_capped_by_dirty_ratio():
    # dirty_ratio=2 on 64 GiB caps the burst at 1.28 GiB -> 1.28 s
    layer = make_layer(ram_gib=64, ratio=2, bg=1)
    window = layer.begin_writeback_burst(3 * GIB, now=0)
    assert window == int(1.28 * GIB) * NS_PER_SEC // GIB


def test_cap_monotonicity():
    for flush in (GIB // 2, 3 * GIB, 10 * GIB):
        tight = make_layer(ram_gib=64, ratio=2, bg=1)
        loose = make_layer(ram_gib=64, ratio=40, bg=10)
        assert tight.begin_writeback_burst(flush, 0) <= loose.begin_writeback_burst(flush, 0)


def test_overlapping_bursts_accumulate():
    layer = make_layer(ram_gib=64, ratio=40)
    layer.begin_writeback_burst(GIB, now=0)
    layer.begin_writeback_burst(GIB, now=0)
    # two 1 GiB bursts at once drain as one 2 GiB backlog
    assert layer.contention_until == 2 * NS_PER_SEC


def test_cross_device_coupling_same_layer_only():
    layer_a = make_layer()
    layer_b = BlockLayer("host-1", total_ram_bytes=64 * GIB)
    dev1 = DeviceModel.make("journal", "new_nvme", "host-0")
    dev2 = DeviceModel.make("ledger", "new_nvme", "host-0")
    dev3 = DeviceModel.make("other", "new_nvme", "host-1")
    layer_a.begin_writeback_burst(3 * GIB, now=0)
    rng = RngState(3).stream("s")
    at = NS_PER_SEC
    v1, deg1 = sample_fsync(dev1, layer_a, rng, at)
    v2, deg2 = sample_fsync(dev2, layer_a, rng, at)
    v3, deg3 = sample_fsync(dev3, layer_b, rng, at)
    assert deg1 and deg2 and not deg3
    assert v1 >= 15 * NS_PER_MS and v2 >= 15 * NS_PER_MS
    assert v3 < 15 * NS_PER_MS


def test_device_layer_mismatch_rejected():
    layer = make_layer()
    dev = DeviceModel.make("d", "new_nvme", "host-9")
    with pytest.raises(ValueError):
        sample_fsync(dev, layer, RngState(1).stream("s"), 0)


def test_tunables_validation():
    with pytest.raises(ValueError):
        OsTunables(dirty_ratio=2, dirty_background_ratio=5)
    with pytest.raises(ValueError):
        OsTunables(dirty_ratio=0, dirty_background_ratio=0)
    OsTunables(dirty_ratio=2, dirty_background_ratio=1)
