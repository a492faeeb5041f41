"""Storage-node model: journal group commit gated by fdatasync, periodic
write-cache flush.

An entry is acknowledged only after a journal fdatasync covering it completes.
Entries joining the journal form groups: a group closes when the configured
wait elapses after its first entry, or when it reaches the entry cap. Groups
fsync strictly serially per journal, one at a time, so queueing delay behind a
slow fsync lands in ack latency. The write cache accumulates entry bytes and
flushes every interval, handing the accumulated bytes to the ledger device's
block layer as a writeback burst.

Event timing note: group closure is discovered at deadline events, which
re-enqueue themselves once at the same instant so that every append computed
for that instant is already visible (a deadline covers entries appended at or
before it). Ack arithmetic always uses exact virtual timestamps carried in
event payloads, never event delivery times, so sub-window scheduling slack
cannot distort latency.
"""

from __future__ import annotations

from bisect import bisect_right as _bisect_right
from collections import deque
from random import Random

from .engine import Engine, Event
from .storage import GIB, BlockLayer, DeviceModel, sample_fsync

K_DEADLINE = "group_deadline"
K_DEADLINE_FINAL = "group_deadline_final"
K_FSYNC_DONE = "fsync_done"
K_FLUSH = "sync_thread_flush"


class BookieProcessing:
    """Per-entry processing delay model (lognormal by median and spread)."""

    __slots__ = ("p50_ns", "sigma")

    def __init__(self, p50_ns: int, sigma: float) -> None:
        self.p50_ns = p50_ns
        self.sigma = sigma


class JournalState:
    """Group-commit batching state for one journal device."""

    __slots__ = (
        "device",
        "group_wait_ns",
        "group_max_entries",
        "pending",
        "next_deadline",
        "fsync_busy",
        "fsync_free",
        "wait_queue",
        "entry_seq",
    )

    def __init__(self, device: DeviceModel, group_wait_ns: int, group_max_entries: int) -> None:
        if group_wait_ns < 0:
            raise ValueError("group_wait must be non-negative")
        if group_max_entries < 1:
            raise ValueError("group_max_entries must be at least 1")
        self.device = device
        self.group_wait_ns = group_wait_ns
        self.group_max_entries = group_max_entries
        # (t_append, entry_seq, msg, t_add, processing_ns), unsorted until a
        # deadline event sorts and consumes the ripe prefix
        self.pending: list[tuple] = []
        self.next_deadline: int | None = None
        self.fsync_busy = False
        self.fsync_free = 0
        self.wait_queue: deque[Group] = deque()
        self.entry_seq = 0


class WriteCache:
    """Entry-log write cache, flushed every flush_interval."""

    __slots__ = ("ledger_device", "flush_interval_ns", "cached_bytes", "pressure_per_gib_ns")

    def __init__(
        self, ledger_device: DeviceModel, flush_interval_ns: int, pressure_per_gib_ns: int = 0
    ) -> None:
        if flush_interval_ns <= 0:
            raise ValueError("flush_interval must be positive")
        self.ledger_device = ledger_device
        self.flush_interval_ns = flush_interval_ns
        self.cached_bytes = 0
        self.pressure_per_gib_ns = pressure_per_gib_ns


class Group:
    __slots__ = ("open_t", "close_t", "close_eff", "window_ns", "entries")

    def __init__(self, open_t: int, close_t: int, close_eff: int, entries: list) -> None:
        self.open_t = open_t
        self.close_t = close_t
        self.close_eff = close_eff
        self.window_ns = close_t - open_t
        self.entries = entries


class Bookie:
    """One storage node: journal + write cache + processing model.

    `sim` is any object providing `on_group_synced(bookie, group, fs_start,
    fs_done, fsync_ns, ack_send)` and, optionally, a `trace_fsync(device_id,
    layer_id, start, end, contended)` hook when tracing.
    """

    def __init__(
        self,
        bookie_id: str,
        journal_device: DeviceModel,
        ledger_device: DeviceModel,
        journal_layer: BlockLayer,
        ledger_layer: BlockLayer,
        processing: BookieProcessing,
        group_wait_ns: int,
        group_max_entries: int,
        flush_interval_ns: int,
        engine: Engine,
        sim,
        fsync_rng: Random,
        message_bytes: int,
        cache_pressure_per_gib_ns: int = 0,
    ) -> None:
        self.bookie_id = bookie_id
        self.journal_device = journal_device
        self.journal_layer = journal_layer
        self.ledger_layer = ledger_layer
        self.processing = processing
        self.journal = JournalState(journal_device, group_wait_ns, group_max_entries)
        self.cache = WriteCache(ledger_device, flush_interval_ns, cache_pressure_per_gib_ns)
        self.engine = engine
        self.sim = sim
        self.fsync_rng = fsync_rng
        self.message_bytes = message_bytes
        self._pause = engine.pause_schedule(bookie_id)
        engine.register(bookie_id, self.handle)

    def start(self) -> None:
        self.engine.schedule(self.cache.flush_interval_ns, K_FLUSH, self.bookie_id)

    def defer(self, t: int) -> int:
        p = self._pause
        starts = p.starts
        if not starts:
            return t
        i = _bisect_right(starts, t) - 1
        if i >= 0:
            end = p.ends[i]
            if t < end:
                return end
        return t

    # -- write path ----------------------------------------------------------

    def add_entry(self, msg, arrival: int, proc_draw_ns: int) -> None:
        """Entry hits the write cache at arrival, then joins the journal's
        pending group after the processing delay (plus any cache-occupancy
        pressure). Acknowledgment comes later, from the covering fsync."""
        cache = self.cache
        delay = proc_draw_ns
        if cache.pressure_per_gib_ns:
            delay += cache.pressure_per_gib_ns * cache.cached_bytes // GIB
        cache.cached_bytes += self.message_bytes
        if self._pause.starts:
            t_add = self.defer(arrival)
            t_append = self.defer(t_add + delay)
        else:
            t_add = arrival
            t_append = arrival + delay
        js = self.journal
        js.entry_seq += 1
        js.pending.append((t_append, js.entry_seq, msg, t_add, delay))
        deadline = t_append + js.group_wait_ns
        if len(js.pending) >= js.group_max_entries:
            deadline = t_append  # check promptly, the cap may already be hit
        nd = js.next_deadline
        if nd is None or deadline < nd:
            js.next_deadline = deadline
            self.engine.schedule(deadline, K_DEADLINE, self.bookie_id)

    def add_batch(self, items: list[tuple]) -> None:
        """add_entry for many (msg, arrival, proc_draw_ns) at once; one
        deadline check for the whole slab."""
        cache = self.cache
        pressure = cache.pressure_per_gib_ns
        cached = cache.cached_bytes
        mbytes = self.message_bytes
        js = self.journal
        pending = js.pending
        eseq = js.entry_seq
        defer = self.defer
        # pause fast path: every item time is >= now, so no defer can matter
        # unless a window is open at now or opens later; check per item only
        # against the nearest window
        starts = self._pause.starts
        if starts:
            now = self.engine.now
            i = _bisect_right(starts, now)
            open_end = self._pause.ends[i - 1] if i > 0 and now < self._pause.ends[i - 1] else 0
            next_start = starts[i] if i < len(starts) else None
        else:
            open_end = 0
            next_start = None
        earliest = None
        for (msg, arrival, draw) in items:
            delay = draw + pressure * cached // GIB if pressure else draw
            cached += mbytes
            t_append = arrival + delay
            if arrival < open_end or (next_start is not None and t_append >= next_start):
                t_add = defer(arrival)
                t_append = defer(t_add + delay)
            else:
                t_add = arrival
            eseq += 1
            pending.append((t_append, eseq, msg, t_add, delay))
            if earliest is None or t_append < earliest:
                earliest = t_append
        cache.cached_bytes = cached
        js.entry_seq = eseq
        deadline = earliest + js.group_wait_ns
        if len(pending) >= js.group_max_entries:
            deadline = earliest
        nd = js.next_deadline
        if nd is None or deadline < nd:
            js.next_deadline = deadline
            self.engine.schedule(deadline, K_DEADLINE, self.bookie_id)

    # -- event handling --------------------------------------------------------

    def handle(self, ev: Event) -> None:
        kind = ev.kind
        if kind == K_DEADLINE:
            # Re-enqueue at the same instant: every append computed for this
            # instant is then in `pending` before groups are formed.
            self.engine.schedule(ev.fire_at, K_DEADLINE_FINAL, self.bookie_id)
        elif kind == K_DEADLINE_FINAL:
            self._form_groups(ev.fire_at)
        elif kind == K_FSYNC_DONE:
            self._on_fsync_done(ev)
        elif kind == K_FLUSH:
            self._on_flush(ev)
        else:
            raise AssertionError(f"bookie {self.bookie_id}: unknown event {kind}")

    def _form_groups(self, now: int) -> None:
        js = self.journal
        if js.next_deadline is not None and js.next_deadline <= now:
            js.next_deadline = None
        pending = js.pending
        if not pending:
            return
        pending.sort()
        W = js.group_wait_ns
        gmax = js.group_max_entries
        n = len(pending)
        idx = 0
        formed = False
        while idx < n:
            t0 = pending[idx][0]
            deadline = t0 + W
            j = idx
            limit = idx + gmax
            while j < n and j < limit and pending[j][0] <= deadline:
                j += 1
            if j - idx == gmax and pending[j - 1][0] <= now:
                close_t = pending[j - 1][0]  # cap reached before the window expired
            elif deadline <= now:
                close_t = deadline
            else:
                # Not ripe: entries inside the window may still be produced.
                nd = js.next_deadline
                if nd is None or deadline < nd:
                    js.next_deadline = deadline
                    self.engine.schedule(deadline, K_DEADLINE, self.bookie_id)
                break
            g = Group(t0, close_t, self.defer(close_t), pending[idx:j])
            js.wait_queue.append(g)
            formed = True
            idx = j
        if idx:
            del pending[:idx]
        if formed:
            self._maybe_issue(now)

    def _maybe_issue(self, now: int) -> None:
        """Serial drain: at most one fsync in flight per journal."""
        js = self.journal
        if js.fsync_busy or not js.wait_queue:
            return
        g = js.wait_queue.popleft()
        issue_at = max(g.close_eff, js.fsync_free)
        start = self.defer(issue_at)
        dur, contended = sample_fsync(self.journal_device, self.journal_layer, self.fsync_rng, start)
        done = start + dur
        js.fsync_free = done
        js.fsync_busy = True
        sim = self.sim
        if getattr(sim, "trace_fsync", None) is not None:
            sim.trace_fsync(
                self.journal_device.device_id, self.journal_layer.layer_id, start, done, contended
            )
        self.engine.schedule(done if done > now else now, K_FSYNC_DONE, self.bookie_id, (g, start, done, dur))

    def _on_fsync_done(self, ev: Event) -> None:
        g, start, done, dur = ev.payload
        js = self.journal
        js.fsync_busy = False
        ack_send = self.defer(done)
        self.sim.on_group_synced(self, g, start, done, dur, ack_send)
        self._maybe_issue(ev.fire_at)

    def _on_flush(self, ev: Event) -> None:
        """SyncThread tick: flush the write cache as one writeback burst on the
        ledger device's block layer, degrading every fsync on that layer for
        the returned window."""
        now = ev.fire_at
        cache = self.cache
        flushed = cache.cached_bytes
        cache.cached_bytes = 0
        self.ledger_layer.begin_writeback_burst(flushed, now)
        self.engine.schedule(now + cache.flush_interval_ns, K_FLUSH, self.bookie_id)
