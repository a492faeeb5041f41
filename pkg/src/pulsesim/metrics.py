"""Latency percentile recording and the per-component decomposition report."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

import numpy as np

from .engine import NS_PER_SEC


class EmptyHistogramError(ValueError):
    """Quantile asked of a histogram with no recorded values."""


def _build_edges() -> list[int]:
    # Bucket 0 is [0, 1us); log buckets at 1% growth up to >= 100s.
    edges = [0, 1000]
    top = 100 * NS_PER_SEC
    v = 1000.0
    while v < top:
        v *= 1.01
        edges.append(int(math.ceil(v)))
    return edges


_EDGES: list[int] = _build_edges()
_EDGES_ARR = np.asarray(_EDGES, dtype=np.int64)
_NBUCKETS = len(_EDGES) - 1
_TOP = _EDGES[-1]
# Geometric bucket midpoints; bucket 0 gets its arithmetic midpoint.
_REPS = [500.0] + [
    math.sqrt(float(_EDGES[i]) * float(_EDGES[i + 1])) for i in range(1, _NBUCKETS)
]


class LatencyHistogram:
    """Logarithmic-bucket latency recorder, 1 us to 100 s at <= 1% bucket width.

    Values are integer nanoseconds. Values above range clamp into the top
    bucket and bump `overflow`. Quantiles carry at most ~0.5% relative error
    against the exact order statistic. Records are buffered and folded into
    the bucket array in batches; every public accessor flushes first.
    """

    __slots__ = ("_counts", "_count", "_total", "_max", "_min", "_overflow", "_buf")

    FLUSH_AT = 8192

    def __init__(self) -> None:
        self._counts = np.zeros(_NBUCKETS, dtype=np.int64)
        self._count = 0
        self._total = 0
        self._max = 0
        self._min = 0
        self._overflow = 0
        self._buf: list[int] = []

    def record(self, value_ns: int) -> None:
        if value_ns < 0:
            raise ValueError("latency must be non-negative")
        self._buf.append(value_ns)
        if len(self._buf) >= self.FLUSH_AT:
            self._flush()

    def record_many(self, values) -> None:
        values = np.asarray(values, dtype=np.int64)
        if len(values) == 0:
            return
        if values.min() < 0:
            raise ValueError("latency must be non-negative")
        self._flush()
        self._buf = values.tolist()
        self._flush()

    def record_block(self, values: list) -> None:
        """Append many pre-validated non-negative values at once."""
        buf = self._buf
        buf.extend(values)
        if len(buf) >= self.FLUSH_AT:
            self._flush()

    def _flush(self) -> None:
        buf = self._buf
        if not buf:
            return
        arr = np.asarray(buf, dtype=np.int64)
        self._buf = []
        over = int((arr >= _TOP).sum())
        if over:
            self._overflow += over
            arr = np.minimum(arr, _TOP - 1)
        idx = np.searchsorted(_EDGES_ARR, arr, side="right") - 1
        np.add.at(self._counts, idx, 1)
        amax = int(arr.max())
        amin = int(arr.min())
        if self._count == 0:
            self._max = amax
            self._min = amin
        else:
            self._max = max(self._max, amax)
            self._min = min(self._min, amin)
        self._count += len(arr)
        self._total += int(arr.sum())

    @property
    def counts(self) -> np.ndarray:
        self._flush()
        return self._counts

    @property
    def count(self) -> int:
        self._flush()
        return self._count

    @property
    def total(self) -> int:
        self._flush()
        return self._total

    @property
    def max(self) -> int:
        self._flush()
        return self._max

    @property
    def min(self) -> int:
        self._flush()
        return self._min

    @property
    def overflow(self) -> int:
        self._flush()
        return self._overflow

    def quantile(self, q: float) -> float:
        """Value at quantile q in ns, within 1% of the exact order statistic."""
        self._flush()
        if self._count == 0:
            raise EmptyHistogramError("histogram is empty")
        if not 0.0 <= q <= 1.0:
            raise ValueError("quantile must be in [0, 1]")
        rank = max(1, math.ceil(q * self._count))
        cum = np.cumsum(self._counts)
        i = int(np.searchsorted(cum, rank))
        rep = _REPS[i]
        return float(min(max(rep, self._min), self._max))

    def merge(self, other: "LatencyHistogram") -> "LatencyHistogram":
        """Pure merge: a new histogram equivalent to recording both inputs."""
        self._flush()
        other._flush()
        out = LatencyHistogram()
        out._counts = self._counts + other._counts
        out._count = self._count + other._count
        out._total = self._total + other._total
        out._overflow = self._overflow + other._overflow
        if self._count and other._count:
            out._max = max(self._max, other._max)
            out._min = min(self._min, other._min)
        elif self._count:
            out._max, out._min = self._max, self._min
        else:
            out._max, out._min = other._max, other._min
        return out

    def nonzero_buckets(self) -> list[tuple[int, int, int]]:
        """(bucket_lo_ns, bucket_hi_ns, count) rows for every non-empty bucket."""
        self._flush()
        rows = []
        for i in np.nonzero(self._counts)[0]:
            rows.append((_EDGES[i], _EDGES[i + 1], int(self._counts[i])))
        return rows

    def mean(self) -> float:
        self._flush()
        return self._total / self._count if self._count else 0.0


COMPONENT_NAMES = ("journal_fsync", "group_wait", "bk_processing", "broker_network")


@dataclass
class ComponentBreakdown:
    """Median per-component contributions plus the additive residual.

    Component medians do not sum to the median of the total; the residual
    (total_p50 minus the component sum) is reported rather than hidden.
    """

    journal_fsync_ns: float
    group_wait_ns: float
    bk_processing_ns: float
    broker_network_ns: float
    total_p50_ns: float

    @property
    def residual_ns(self) -> float:
        return self.total_p50_ns - (
            self.journal_fsync_ns
            + self.group_wait_ns
            + self.bk_processing_ns
            + self.broker_network_ns
        )

    def rows(self) -> list[tuple[str, float]]:
        return [
            ("journal_fsync", self.journal_fsync_ns),
            ("group_wait", self.group_wait_ns),
            ("bk_processing", self.bk_processing_ns),
            ("broker_network", self.broker_network_ns),
            ("total_p50", self.total_p50_ns),
            ("residual", self.residual_ns),
        ]


@dataclass
class Counters:
    published: int = 0
    acked: int = 0
    failed: int = 0
    delivered: int = 0

    @property
    def in_flight(self) -> int:
        return self.published - self.acked - self.failed


@dataclass
class SimReport:
    """Everything a run produces: histograms, rates, decomposition inputs, logs."""

    duration_ns: int
    seed: int
    publish: LatencyHistogram = field(default_factory=LatencyHistogram)
    e2e: LatencyHistogram = field(default_factory=LatencyHistogram)
    components: dict[str, LatencyHistogram] = field(
        default_factory=lambda: {name: LatencyHistogram() for name in COMPONENT_NAMES}
    )
    counters: Counters = field(default_factory=Counters)
    # broker id -> {"arrived"|"acked"|"delivered": per-second counts}
    broker_rates: dict[str, dict[str, np.ndarray]] = field(default_factory=dict)
    # (layer_id, start_ns, end_ns, burst_bytes)
    contention_windows: list[tuple[str, int, int, int]] = field(default_factory=list)
    # (process_id, start_ns, end_ns)
    gc_pauses: list[tuple[str, int, int]] = field(default_factory=list)

    def publish_throughput(self) -> float:
        return self.counters.acked / (self.duration_ns / NS_PER_SEC)

    def e2e_throughput(self) -> float:
        return self.counters.delivered / (self.duration_ns / NS_PER_SEC)

    def total_contention_ns(self) -> int:
        return sum(end - start for _, start, end, _ in self.contention_windows)


def decompose(report: SimReport) -> ComponentBreakdown:
    """Median of each tagged component stream plus the publish P50."""

    def med(h: LatencyHistogram) -> float:
        return h.quantile(0.5) if h.count else 0.0

    return ComponentBreakdown(
        journal_fsync_ns=med(report.components["journal_fsync"]),
        group_wait_ns=med(report.components["group_wait"]),
        bk_processing_ns=med(report.components["bk_processing"]),
        broker_network_ns=med(report.components["broker_network"]),
        total_p50_ns=med(report.publish),
    )
