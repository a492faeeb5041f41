import collections
import random

import pytest
from hypothesis import given, settings, strategies as st

from pulsesim.routing import (
    HASH_SPACE,
    Assignment,
    BundleMap,
    FederationMap,
    FederationRange,
    KeySharedState,
    RoutingError,
    stable_hash16,
    stable_hash32,
    validate_federation,
)

PAPER_RANGES = [
    FederationRange("cluster-1", 0, 25),
    FederationRange("cluster-2", 26, 51),
    FederationRange("cluster-3", 52, 77),
    FederationRange("cluster-4", 78, 102),
    FederationRange("cluster-5", 103, 127),
]


def test_fnv1a_test_vectors():
    assert stable_hash32("") == 0x811C9DC5
    assert stable_hash32("a") == 0xE40C292C
    assert stable_hash32("foobar") == 0xBF9CF968
    assert stable_hash32(b"a") == stable_hash32("a")
    assert stable_hash16("a") == 0xE40C292C & 0xFFFF


def test_single_partition_routes_everything_to_zero():
    fmap = FederationMap.single_cluster(1)
    for key in ("a", "b", "zzz"):
        assert fmap.route(key) == ("default", 0)


def test_partition_13_lands_in_cluster_1():
    fmap = FederationMap(128, PAPER_RANGES)
    # find a key whose hash mod 128 is 13 and confirm the range lookup
    key = next(f"k{i}" for i in range(10_000) if stable_hash32(f"k{i}") % 128 == 13)
    cluster, partition = fmap.route(key)
    assert partition == 13
    assert cluster == "cluster-1"


def test_routing_proportional_to_range_sizes():
    fmap = FederationMap(128, PAPER_RANGES)
    rng = random.Random(424242)
    counts = collections.Counter()
    partitions = set()
    n = 10_000
    for _ in range(n):
        key = f"acct-{rng.getrandbits(48):012x}"
        cluster, partition = fmap.route(key)
        counts[cluster] += 1
        partitions.add(partition)
    assert partitions == set(range(128))
    sizes = {r.cluster_id: (r.hi - r.lo + 1) for r in PAPER_RANGES}
    for cluster, size in sizes.items():
        expected = n * size / 128
        assert abs(counts[cluster] - expected) / expected < 0.10


def test_routing_is_deterministic():
    fmap = FederationMap(128, PAPER_RANGES)
    assert fmap.route("stable-key") == fmap.route("stable-key")


def test_literal_mode_routes_by_prefix():
    fmap = FederationMap(128, PAPER_RANGES, mode="literal")
    cluster, partition = fmap.route("cluster-3-account-99")
    assert cluster == "cluster-3"
    assert 52 <= partition <= 77
    with pytest.raises(RoutingError):
        fmap.route("unknown-17")


def test_federation_gap_and_overlap_rejected():
    gap = [FederationRange("a", 0, 10), FederationRange("b", 12, 127)]
    errors = validate_federation(128, gap)
    assert any("gap" in e for e in errors)
    overlap = [FederationRange("a", 0, 60), FederationRange("b", 50, 127)]
    errors = validate_federation(128, overlap)
    assert any("overlap" in e for e in errors)
    with pytest.raises(ValueError):
        FederationMap(128, gap)


def test_paper_map_exact_cover():
    assert validate_federation(128, PAPER_RANGES) == []
    fmap = FederationMap(128, PAPER_RANGES)
    for p in range(128):
        r = fmap.range_for_partition(p)
        assert r.lo <= p <= r.hi


# --- Key_Shared -------------------------------------------------------------


def full_cover(state):
    if not state.assignments:
        return False
    expected = 0
    for a in state.assignments:
        if a.lo != expected:
            return False
        expected = a.hi
    return expected == HASH_SPACE


def test_single_consumer_owns_everything():
    state = KeySharedState().join("c1")
    for key in ("x", "y", "z"):
        assert state.assign(key) == "c1"


def test_midpoint_membership():
    state = KeySharedState(
        [Assignment(0, HASH_SPACE // 2, "c1"), Assignment(HASH_SPACE // 2, HASH_SPACE, "c2")]
    )
    assert state.assign_hash(0x1000) == "c1"
    assert state.assign_hash(0x9000) == "c2"


def test_assignment_is_stable():
    state = KeySharedState().join("c1").join("c2").join("c3")
    assert state.assign("acct-1") == state.assign("acct-1")


def test_no_consumers_is_a_routing_error():
    with pytest.raises(RoutingError):
        KeySharedState().assign("k")


def test_join_then_leave_restores_ranges():
    state = KeySharedState().join("c1").join("c2")
    before = {(a.lo, a.hi, a.consumer_id) for a in state.assignments}
    after_state = state.join("c3").leave("c3")
    after = {(a.lo, a.hi, a.consumer_id) for a in after_state.assignments}
    assert before == after


def test_leave_unknown_consumer_is_fatal():
    with pytest.raises(RoutingError):
        KeySharedState().join("c1").leave("nope")


def test_n_joins_one_leave_full_cover_scan():
    state = KeySharedState()
    for i in range(8):
        state = state.join(f"c{i}")
    state = state.leave("c3")
    assert full_cover(state)
    assert state.consumers() == {f"c{i}" for i in range(8)} - {"c3"}
    # exhaustive scan of the hash space agrees with the range list
    owners = [state.assign_hash(h) for h in range(0, HASH_SPACE, 256)]
    assert set(owners) == state.consumers()


@settings(max_examples=60, deadline=None)
@given(st.lists(st.sampled_from(["j0", "j1", "j2", "j3", "l0", "l1", "l2", "l3"]), max_size=24))
def test_rebalance_conservation(ops):
    state = KeySharedState()
    live: list[str] = []
    counter = 0
    for op in ops:
        if op.startswith("j"):
            counter += 1
            name = f"c{counter}"
            state = state.join(name)
            live.append(name)
        elif live:
            victim = live.pop(int(op[1]) % len(live))
            state = state.leave(victim)
    if live:
        assert full_cover(state)
        assert state.consumers() == set(live)
    else:
        assert state.assignments == []


# --- bundles ----------------------------------------------------------------


def test_initial_bundles_span_256_hashes():
    bm = BundleMap(["br-0"], num_bundles=256, split_threshold_per_s=1000)
    assert len(bm.bundles) == 256
    assert all(b.hi - b.lo == 256 for b in bm.bundles)


def test_no_split_below_threshold():
    bm = BundleMap(["br-0", "br-1"], num_bundles=4, split_threshold_per_s=100)
    for h in range(0, 50):
        bm.record(h)
    created = bm.tick(0, interval_s=1.0)
    assert created == []


def test_one_split_per_tick_and_load_halves():
    bm = BundleMap(["br-0", "br-1"], num_bundles=4, split_threshold_per_s=100)
    hot = bm.bundles[0]
    for _ in range(200):  # 2x the threshold on one bundle
        bm.record(hot.lo)
    created = bm.tick(0, interval_s=1.0)
    assert len(created) == 1
    child = created[0]
    assert child.lo == hot.hi  # split at the midpoint of the original range
    assert child.hi - child.lo == hot.hi - hot.lo
    assert len(bm.bundles) == 5


def test_split_child_goes_to_least_loaded_broker():
    bm = BundleMap(["br-0", "br-1"], num_bundles=2, split_threshold_per_s=10)
    # load only bundle 0 (owned by br-0); br-1 is idle and takes the child
    for _ in range(100):
        bm.record(0)
    created = bm.tick(0, interval_s=1.0)
    assert created and created[0].broker_id == "br-1"


def test_bundle_lookup_covers_space():
    bm = BundleMap(["br-0"], num_bundles=8, split_threshold_per_s=10)
    for h in range(0, HASH_SPACE, 997):
        b = bm.bundle_for(h)
        assert b.lo <= h < b.hi
