"""Stop-the-world GC pause injection.

A paused process observes nothing until the pause ends: events targeting it
are delayed to the pause end (the engine's gate), and synchronous paths defer
timestamps through the same schedule. Pause arrival is exponential and pause
length right-skewed between the median and the max, with a configurable tail
fraction that lands near the max (the intermittent long collections a large
heap produces).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .engine import NS_PER_MS, NS_PER_SEC, PauseSchedule

GC_KINDS = ("g1_like", "zgc_like", "none")

DEFAULT_PAUSE_SIGMA = 0.5
G1_BASE_HEAP_GB = 32.0


@dataclass(frozen=True)
class GcModel:
    kind: str
    heap_gb: float = 32.0
    pause_p50_ns: int = 0
    pause_max_ns: int = 0
    mean_interval_ns: int = 0
    tail_frac: float = 0.0
    pause_sigma: float = DEFAULT_PAUSE_SIGMA

    def __post_init__(self) -> None:
        if self.kind not in GC_KINDS:
            raise ValueError(f"unknown gc kind {self.kind!r}")
        if self.kind != "none":
            if self.pause_p50_ns <= 0 or self.pause_max_ns < self.pause_p50_ns:
                raise ValueError("need 0 < pause_p50 <= pause_max")
            if self.mean_interval_ns <= 0:
                raise ValueError("mean_interval must be positive")
            if not 0.0 <= self.tail_frac <= 1.0:
                raise ValueError("tail_frac must be in [0, 1]")


def g1_like(
    heap_gb: float = 32.0,
    mean_interval_ns: int = 30 * NS_PER_SEC,
    tail_frac: float = 0.01,
) -> GcModel:
    """Old-collector profile: 20 ms median pauses, max scaling with heap so a
    32 GB heap tops out at 220 ms."""
    pause_max = int(220 * NS_PER_MS * heap_gb / G1_BASE_HEAP_GB)
    return GcModel(
        kind="g1_like",
        heap_gb=heap_gb,
        pause_p50_ns=20 * NS_PER_MS,
        pause_max_ns=max(pause_max, 20 * NS_PER_MS),
        mean_interval_ns=mean_interval_ns,
        tail_frac=tail_frac,
    )


def zgc_like(heap_gb: float = 32.0, mean_interval_ns: int = 10 * NS_PER_SEC) -> GcModel:
    """Concurrent-collector profile: every pause stays below one millisecond."""
    return GcModel(
        kind="zgc_like",
        heap_gb=heap_gb,
        pause_p50_ns=200_000,      # 0.2 ms
        pause_max_ns=900_000,      # 0.9 ms, strictly sub-ms
        mean_interval_ns=mean_interval_ns,
        tail_frac=0.0,
    )


def none_model() -> GcModel:
    return GcModel(kind="none")


def next_pause(model: GcModel, rng: random.Random) -> tuple[int, int]:
    """(gap to next pause start, pause length) in ns.

    The gap is exponential with the configured mean. Length is lognormal with
    median pause_p50 clamped at pause_max, except a tail_frac of pauses that
    draw uniformly in the top 5% of the band near pause_max.
    """
    if model.kind == "none":
        raise ValueError("no pauses for kind=none")
    gap = max(0, int(round(rng.expovariate(1.0 / model.mean_interval_ns))))
    if model.tail_frac > 0.0 and rng.random() < model.tail_frac:
        length = rng.uniform(0.95 * model.pause_max_ns, model.pause_max_ns)
    else:
        length = rng.lognormvariate(math.log(model.pause_p50_ns), model.pause_sigma)
        length = min(length, model.pause_max_ns)
    return gap, max(1, int(round(length)))


def build_pause_schedule(model: GcModel, rng: random.Random, horizon_ns: int) -> PauseSchedule:
    """Precompute all pause windows for one process over [0, horizon).

    Pause arrival does not depend on the workload, so the whole schedule is
    known up front; the engine gates events through it and synchronous paths
    defer timestamps through it, giving identical semantics on both paths.
    """
    sched = PauseSchedule()
    if model.kind == "none":
        return sched
    t = 0
    while True:
        gap, length = next_pause(model, rng)
        start = t + gap
        if start >= horizon_ns:
            break
        sched.add(start, length)
        t = start + length
    return sched
