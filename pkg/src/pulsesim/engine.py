"""Deterministic discrete-event core: virtual clock, ordered event heap, pause gates.

All simulation time is integer nanoseconds since run start. Events are totally
ordered by (fire_at, seq) where seq is a per-engine insertion counter, so two
events scheduled for the same instant fire in scheduling order. Components that
can be frozen by a stop-the-world pause carry a pause schedule; an event whose
target is paused at its fire time is transparently re-queued to the pause end,
which preserves the relative order of all delayed events.
"""

from __future__ import annotations

import bisect
import hashlib
import heapq
import random
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

NS_PER_US = 1_000
NS_PER_MS = 1_000_000
NS_PER_SEC = 1_000_000_000

# SimTime is an integer count of nanoseconds.
SimTime = int


class SimulationError(Exception):
    """Base class for all simulator errors."""


class InternalInvariantError(SimulationError):
    """A structural invariant of the model was violated (a bug, not bad input)."""


@dataclass(frozen=True, slots=True)
class Event:
    fire_at: int
    seq: int
    kind: str
    target: str
    payload: Any = None


class PauseSchedule:
    """Sorted, non-overlapping [start, end) freeze windows for one component.

    `defer(t)` maps an instant to the end of the window containing it (or to t
    itself when the component is running). Windows must be appended in
    non-decreasing start order and must not overlap.
    """

    __slots__ = ("starts", "ends")

    def __init__(self) -> None:
        self.starts: list[int] = []
        self.ends: list[int] = []

    def add(self, start: int, length: int) -> None:
        if length < 0:
            raise InternalInvariantError("pause length must be non-negative")
        if self.ends and start < self.ends[-1]:
            raise InternalInvariantError("pause windows must be appended in order")
        if length == 0:
            return
        self.starts.append(start)
        self.ends.append(start + length)

    def defer(self, t: int) -> int:
        i = bisect.bisect_right(self.starts, t) - 1
        if i >= 0 and t < self.ends[i]:
            return self.ends[i]
        return t

    def windows(self) -> list[tuple[int, int]]:
        return list(zip(self.starts, self.ends))


class Engine:
    """Single-threaded virtual-time scheduler.

    Handlers are registered per target id and receive the Event. The engine
    enforces the event total order (strictly increasing (fire_at, seq) among
    fired events) and refuses scheduling into the past.
    """

    def __init__(self, record_fired: bool = False) -> None:
        self._heap: list[tuple[int, int, Event]] = []
        self._seq = 0
        self._now = 0
        self._handlers: dict[str, Callable[[Event], None]] = {}
        self._gates: dict[str, PauseSchedule] = {}
        self._last_fired: tuple[int, int] = (-1, -1)
        self.fired_count = 0
        self.record_fired = record_fired
        self.fired_log: list[tuple[int, int, str, str]] = []

    @property
    def now(self) -> int:
        return self._now

    def register(self, target: str, handler: Callable[[Event], None]) -> None:
        if target in self._handlers:
            raise InternalInvariantError(f"duplicate handler for target {target!r}")
        self._handlers[target] = handler

    def set_pause_schedule(self, target: str, schedule: PauseSchedule) -> None:
        self._gates[target] = schedule

    def pause_schedule(self, target: str) -> PauseSchedule:
        sched = self._gates.get(target)
        if sched is None:
            sched = PauseSchedule()
            self._gates[target] = sched
        return sched

    def apply_pause(self, target: str, start: int, length: int) -> None:
        """Freeze `target` for [start, start+length): events for it in that
        window fire at the window end, in their original relative order."""
        self.pause_schedule(target).add(start, length)

    def deferred_until(self, target: str, t: int) -> int:
        sched = self._gates.get(target)
        return t if sched is None else sched.defer(t)

    def schedule(self, fire_at: int, kind: str, target: str, payload: Any = None) -> Event:
        if fire_at < self._now:
            raise InternalInvariantError(
                f"event {kind!r} for {target!r} scheduled at {fire_at} ns, "
                f"before current time {self._now} ns (model bug)"
            )
        ev = Event(fire_at, self._seq, kind, target, payload)
        self._seq += 1
        heapq.heappush(self._heap, (fire_at, ev.seq, ev))
        return ev

    def pending(self) -> int:
        return len(self._heap)

    def run_until(self, horizon: int) -> None:
        """Fire every event with fire_at < horizon.

        The horizon is exclusive: an event at exactly the horizon stays queued,
        so a run of duration D covers the half-open interval [0, D).
        """
        heap = self._heap
        gates = self._gates
        handlers = self._handlers
        while heap and heap[0][0] < horizon:
            fire_at, seq, ev = heapq.heappop(heap)
            gate = gates.get(ev.target)
            if gate is not None:
                deferred = gate.defer(fire_at)
                if deferred > fire_at:
                    # Re-queue with a fresh seq: delayed events keep their
                    # relative order because pops happen in (fire_at, seq) order.
                    nev = Event(deferred, self._seq, ev.kind, ev.target, ev.payload)
                    self._seq += 1
                    heapq.heappush(heap, (deferred, nev.seq, nev))
                    continue
            pair = (fire_at, seq)
            if pair <= self._last_fired:
                raise InternalInvariantError(
                    f"event total order violated: {pair} after {self._last_fired}"
                )
            self._last_fired = pair
            self._now = fire_at
            self.fired_count += 1
            if self.record_fired:
                self.fired_log.append((fire_at, seq, ev.kind, ev.target))
            handlers[ev.target](ev)


def _derive_seed(seed: int, name: str, tag: str) -> int:
    digest = hashlib.sha256(f"{tag}\x1f{seed}\x1f{name}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


class RngState:
    """Named random streams derived from one 64-bit seed.

    Each name maps to an independent stream whose state depends only on
    (seed, name), never on creation order, so adding or removing one stochastic
    model cannot perturb another's draws. `stream` returns a stdlib Random for
    scalar draws; `array_stream` a numpy Generator for vectorized draws. The
    two are independent even for the same name.
    """

    def __init__(self, seed: int) -> None:
        self.seed = int(seed)
        self._scalar: dict[str, random.Random] = {}
        self._array: dict[str, np.random.Generator] = {}

    def stream(self, name: str) -> random.Random:
        r = self._scalar.get(name)
        if r is None:
            r = random.Random(_derive_seed(self.seed, name, "scalar"))
            self._scalar[name] = r
        return r

    def array_stream(self, name: str) -> np.random.Generator:
        g = self._array.get(name)
        if g is None:
            g = np.random.default_rng(_derive_seed(self.seed, name, "array"))
            self._array[name] = g
        return g


def lognormal_draw(rng: random.Random, median_ns: int, sigma: float) -> int:
    """One right-skewed latency draw with the given median, in integer ns.

    A median of zero is the degenerate zero-latency model and draws nothing.
    """
    if median_ns == 0:
        return 0
    if sigma == 0.0:
        return median_ns
    import math

    return max(0, int(round(rng.lognormvariate(math.log(median_ns), sigma))))
