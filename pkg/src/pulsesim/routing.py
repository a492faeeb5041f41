"""Key -> cluster -> partition federation, Key_Shared ranges, namespace bundles.

Everything here is pure and deterministic: routing depends only on the key and
the map, never on time or load. The stable hash is 32-bit FNV-1a so any port
of this model routes identically; the 16-bit hash space used by Key_Shared and
bundles is the low 16 bits of that hash.

FNV-1a test vectors (offset 2166136261, prime 16777619):
    ""       -> 0x811C9DC5
    "a"      -> 0xE40C292C
    "foobar" -> 0xBF9CF968
"""

from __future__ import annotations

from dataclasses import dataclass, field

FNV32_OFFSET = 0x811C9DC5
FNV32_PRIME = 0x01000193
HASH_SPACE = 1 << 16


class RoutingError(Exception):
    """Routing asked of a state that cannot answer (e.g. no consumers)."""


def stable_hash32(key: str | bytes) -> int:
    if isinstance(key, str):
        key = key.encode("utf-8")
    h = FNV32_OFFSET
    for b in key:
        h ^= b
        h = (h * FNV32_PRIME) & 0xFFFFFFFF
    return h


def stable_hash16(key: str | bytes) -> int:
    return stable_hash32(key) & 0xFFFF


@dataclass(frozen=True)
class FederationRange:
    cluster_id: str
    lo: int  # inclusive
    hi: int  # inclusive


class FederationMap:
    """Static assignment of partition ranges to independent clusters.

    Construction rejects any map whose ranges overlap or leave a gap: every
    accepted map exactly covers [0, total_partitions). Two routing modes:

    * hash (default): partition = stable_hash32(key) mod total_partitions,
      cluster = the range containing that partition.
    * literal: the key's leading "<cluster_id>-" prefix selects the cluster
      directly and the hash spreads the key within that cluster's range
      (reproduces presentations that write keys as literal cluster names).
    """

    def __init__(self, total_partitions: int, ranges: list[FederationRange], mode: str = "hash"):
        errors = validate_federation(total_partitions, ranges)
        if errors:
            raise ValueError("; ".join(errors))
        if mode not in ("hash", "literal"):
            raise ValueError(f"unknown federation mode {mode!r}")
        self.total_partitions = total_partitions
        self.ranges = sorted(ranges, key=lambda r: r.lo)
        self.mode = mode
        self._los = [r.lo for r in self.ranges]

    @classmethod
    def single_cluster(cls, total_partitions: int, cluster_id: str = "default") -> "FederationMap":
        return cls(total_partitions, [FederationRange(cluster_id, 0, total_partitions - 1)])

    def cluster_ids(self) -> list[str]:
        return [r.cluster_id for r in self.ranges]

    def range_for_partition(self, partition: int) -> FederationRange:
        import bisect

        i = bisect.bisect_right(self._los, partition) - 1
        return self.ranges[i]

    def route(self, key: str | bytes) -> tuple[str, int]:
        if self.mode == "literal":
            return self.route_literal(key)
        partition = stable_hash32(key) % self.total_partitions
        return self.range_for_partition(partition).cluster_id, partition

    def route_literal(self, key: str | bytes) -> tuple[str, int]:
        text = key.decode("utf-8") if isinstance(key, bytes) else key
        for r in self.ranges:
            if text == r.cluster_id or text.startswith(r.cluster_id + "-"):
                span = r.hi - r.lo + 1
                return r.cluster_id, r.lo + stable_hash32(key) % span
        raise RoutingError(f"key {text!r} matches no cluster prefix")


def validate_federation(total_partitions: int, ranges: list[FederationRange]) -> list[str]:
    """All construction errors, not just the first."""
    errors: list[str] = []
    if total_partitions <= 0:
        errors.append("total_partitions must be positive")
        return errors
    if not ranges:
        errors.append("federation map needs at least one range")
        return errors
    for r in ranges:
        if r.lo > r.hi:
            errors.append(f"range {r.cluster_id}: lo {r.lo} > hi {r.hi}")
        if r.lo < 0 or r.hi >= total_partitions:
            errors.append(
                f"range {r.cluster_id}: [{r.lo}, {r.hi}] outside [0, {total_partitions - 1}]"
            )
    ordered = sorted(ranges, key=lambda r: (r.lo, r.hi))
    expected = 0
    for r in ordered:
        if r.lo > expected:
            errors.append(f"gap: partitions {expected}-{r.lo - 1} unassigned")
        elif r.lo < expected:
            errors.append(f"overlap at partition {r.lo} (range {r.cluster_id})")
        expected = max(expected, r.hi + 1)
    if not errors and expected != total_partitions:
        errors.append(f"gap: partitions {expected}-{total_partitions - 1} unassigned")
    return errors


@dataclass(frozen=True)
class Assignment:
    lo: int  # inclusive
    hi: int  # exclusive
    consumer_id: str


class KeySharedState:
    """Hash-range ownership for one Key_Shared subscription.

    Whenever at least one consumer exists the assignment ranges are disjoint
    and cover [0, 2^16). Rebalance is deterministic: a join splits the largest
    range (ties to the lowest lo) at its midpoint and the joiner takes the
    upper half; a leave merges each departed range into its lower hash-adjacent
    neighbor (the following one for a range starting at zero).
    """

    def __init__(self, assignments: list[Assignment] | None = None) -> None:
        self.assignments: list[Assignment] = sorted(assignments or [], key=lambda a: a.lo)
        self._check_cover()

    def _check_cover(self) -> None:
        if not self.assignments:
            return
        expected = 0
        for a in self.assignments:
            if a.lo != expected or a.hi <= a.lo:
                raise RoutingError("assignment ranges must be disjoint and contiguous")
            expected = a.hi
        if expected != HASH_SPACE:
            raise RoutingError("assignment ranges must cover the full hash space")

    def consumers(self) -> set[str]:
        return {a.consumer_id for a in self.assignments}

    def assign(self, key: str | bytes) -> str:
        return self.assign_hash(stable_hash16(key))

    def assign_hash(self, h: int) -> str:
        if not self.assignments:
            raise RoutingError("no consumers attached")
        import bisect

        los = [a.lo for a in self.assignments]
        return self.assignments[bisect.bisect_right(los, h) - 1].consumer_id

    def join(self, consumer_id: str) -> "KeySharedState":
        if not self.assignments:
            return KeySharedState([Assignment(0, HASH_SPACE, consumer_id)])
        largest = max(self.assignments, key=lambda a: (a.hi - a.lo, -a.lo))
        span = largest.hi - largest.lo
        if span < 2:
            raise RoutingError("hash space exhausted, cannot split further")
        mid = largest.lo + span // 2
        out = [a for a in self.assignments if a is not largest]
        out.append(Assignment(largest.lo, mid, largest.consumer_id))
        out.append(Assignment(mid, largest.hi, consumer_id))
        return KeySharedState(out)

    def leave(self, consumer_id: str) -> "KeySharedState":
        if consumer_id not in self.consumers():
            raise RoutingError(f"leave of unknown consumer {consumer_id!r}")
        out: list[Assignment] = []
        orphan_lo: int | None = None
        for a in self.assignments:
            if a.consumer_id == consumer_id:
                if out:
                    prev = out[-1]
                    out[-1] = Assignment(prev.lo, a.hi, prev.consumer_id)
                else:
                    orphan_lo = a.lo if orphan_lo is None else orphan_lo
            else:
                lo = a.lo
                if orphan_lo is not None:
                    lo = orphan_lo
                    orphan_lo = None
                out.append(Assignment(lo, a.hi, a.consumer_id))
        if orphan_lo is not None and out:
            # departed consumer held a suffix: extend the last survivor
            last = out[-1]
            out[-1] = Assignment(last.lo, HASH_SPACE, last.consumer_id)
        return KeySharedState(out)


@dataclass
class Bundle:
    bundle_id: str
    lo: int  # inclusive
    hi: int  # exclusive
    broker_id: str
    load_counter: float = 0.0


class BundleMap:
    """Splittable key-hash ranges for broker-level load balancing.

    The namespace starts with num_bundles equal ranges over [0, 2^16) assigned
    round-robin to brokers. Each check interval, any bundle whose measured rate
    exceeds the split threshold splits at its hash midpoint; the upper child
    moves to the least-loaded broker. Counters reset every interval.
    """

    def __init__(self, brokers: list[str], num_bundles: int, split_threshold_per_s: float):
        if num_bundles <= 0 or HASH_SPACE % num_bundles != 0:
            raise ValueError("num_bundles must divide the 2^16 hash space")
        if not brokers:
            raise ValueError("bundle map needs at least one broker")
        self.brokers = list(brokers)
        self.split_threshold = split_threshold_per_s
        width = HASH_SPACE // num_bundles
        self.bundles: list[Bundle] = [
            Bundle(f"b{i:04x}", i * width, (i + 1) * width, brokers[i % len(brokers)])
            for i in range(num_bundles)
        ]
        self.split_log: list[tuple[int, str, str]] = []  # (time_ns, bundle, new_broker)

    def bundle_for(self, h: int) -> Bundle:
        import bisect

        los = [b.lo for b in self.bundles]
        return self.bundles[bisect.bisect_right(los, h) - 1]

    def broker_for(self, key: str | bytes) -> str:
        return self.bundle_for(stable_hash16(key)).broker_id

    def record(self, h: int, weight: float = 1.0) -> None:
        self.bundle_for(h).load_counter += weight

    def _broker_load(self) -> dict[str, float]:
        load: dict[str, float] = {b: 0.0 for b in self.brokers}
        for bundle in self.bundles:
            load[bundle.broker_id] += bundle.load_counter
        return load

    def tick(self, now_ns: int, interval_s: float) -> list[Bundle]:
        """Split every over-threshold bundle once; returns the new bundles."""
        created: list[Bundle] = []
        loads = self._broker_load()
        for bundle in list(self.bundles):
            rate = bundle.load_counter / interval_s
            if rate <= self.split_threshold or bundle.hi - bundle.lo < 2:
                continue
            mid = bundle.lo + (bundle.hi - bundle.lo) // 2
            target = min(self.brokers, key=lambda b: (loads[b], b))
            child = Bundle(f"{bundle.bundle_id}+{mid:04x}", mid, bundle.hi, target)
            bundle.hi = mid
            bundle.load_counter /= 2.0
            child.load_counter = bundle.load_counter
            loads[target] += child.load_counter
            loads[bundle.broker_id] -= child.load_counter
            created.append(child)
            self.split_log.append((now_ns, bundle.bundle_id, target))
        if created:
            self.bundles.extend(created)
            self.bundles.sort(key=lambda b: b.lo)
        for bundle in self.bundles:
            bundle.load_counter = 0.0
        return created
