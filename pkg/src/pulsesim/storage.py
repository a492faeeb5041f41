"""Per-device fdatasync latency and the shared block-layer contention domain.

Physically separate devices on one host still share the kernel block layer;
during a writeback burst every device on that layer sees degraded fsync draws,
uniform over a configured band. Burst magnitude is capped by the dirty-ratio
share of host RAM, which is what the dirty-ratio tunable buys you.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .engine import NS_PER_MS, NS_PER_SEC

GIB = 1 << 30

# Tier presets: median journal fdatasync by device health.
TIER_FSYNC_P50_NS = {
    "new_nvme": 20_000,          # 0.02 ms
    "worn_nvme": 4_630_000,      # middle of the observed 2.65-6.61 ms band
    "worn_ssd": 5_100_000,       # 5.1 ms
}

DEFAULT_FSYNC_SIGMA = 0.25
DEFAULT_DEGRADED_LO_NS = 15 * NS_PER_MS
DEFAULT_DEGRADED_HI_NS = 22 * NS_PER_MS
DEFAULT_DRAIN_RATE = GIB  # bytes per second


@dataclass(frozen=True)
class OsTunables:
    """Kernel dirty-page knobs that shape writeback behavior."""

    dirty_ratio: int = 40
    dirty_background_ratio: int = 10
    dirty_expire_centisecs: int = 3000
    dirty_writeback_centisecs: int = 500

    def __post_init__(self) -> None:
        if not (0 < self.dirty_background_ratio <= self.dirty_ratio <= 100):
            raise ValueError(
                "tunables must satisfy 0 < dirty_background_ratio <= dirty_ratio <= 100"
            )
        if self.dirty_expire_centisecs <= 0 or self.dirty_writeback_centisecs <= 0:
            raise ValueError("centisec cadences must be positive")


@dataclass(frozen=True)
class DeviceModel:
    device_id: str
    tier: str
    fsync_p50_ns: int
    fsync_sigma: float
    block_layer_id: str

    @classmethod
    def make(
        cls,
        device_id: str,
        tier: str,
        block_layer_id: str,
        fsync_p50_ns: int | None = None,
        fsync_sigma: float = DEFAULT_FSYNC_SIGMA,
    ) -> "DeviceModel":
        if tier == "custom":
            if fsync_p50_ns is None:
                raise ValueError(f"device {device_id}: custom tier requires fsync_p50")
        elif tier in TIER_FSYNC_P50_NS:
            if fsync_p50_ns is None:
                fsync_p50_ns = TIER_FSYNC_P50_NS[tier]
        else:
            raise ValueError(f"device {device_id}: unknown tier {tier!r}")
        if fsync_p50_ns <= 0:
            raise ValueError(f"device {device_id}: fsync_p50 must be positive")
        return cls(device_id, tier, fsync_p50_ns, fsync_sigma, block_layer_id)


class BlockLayer:
    """One host's shared I/O submission path.

    Tracks dirty page-cache bytes with a lazily-applied background drain (runs
    in writeback-cadence steps once the background ratio is crossed, never
    causing contention) and foreground writeback bursts that open a contention
    window during which every fsync on the layer draws from the degraded band.
    Overlapping bursts accumulate into one backlog drained at the configured
    rate.
    """

    def __init__(
        self,
        layer_id: str,
        total_ram_bytes: int,
        tunables: OsTunables | None = None,
        drain_rate_bytes_per_s: int = DEFAULT_DRAIN_RATE,
        degraded_lo_ns: int = DEFAULT_DEGRADED_LO_NS,
        degraded_hi_ns: int = DEFAULT_DEGRADED_HI_NS,
    ) -> None:
        if total_ram_bytes <= 0:
            raise ValueError("total_ram must be positive")
        if drain_rate_bytes_per_s <= 0:
            raise ValueError("drain_rate must be positive")
        if not degraded_lo_ns < degraded_hi_ns:
            raise ValueError("degraded_lo must be < degraded_hi")
        self.layer_id = layer_id
        self.total_ram_bytes = total_ram_bytes
        self.tunables = tunables or OsTunables()
        self.drain_rate = drain_rate_bytes_per_s
        self.degraded_lo_ns = degraded_lo_ns
        self.degraded_hi_ns = degraded_hi_ns
        self.contention_until = 0
        self.dirty_bytes = 0
        self._dirty_asof = 0
        # (start_ns, end_ns, burst_bytes) of every opened window
        self.window_log: list[tuple[int, int, int]] = []

    @property
    def background_threshold(self) -> int:
        return self.total_ram_bytes * self.tunables.dirty_background_ratio // 100

    @property
    def dirty_cap(self) -> int:
        return self.total_ram_bytes * self.tunables.dirty_ratio // 100

    @property
    def draining(self) -> bool:
        return self.dirty_bytes > self.background_threshold

    def contended(self, now: int) -> bool:
        return now < self.contention_until

    def _settle(self, now: int) -> None:
        # Background drain runs in writeback-cadence steps down to the
        # background threshold; it never opens a contention window.
        if now <= self._dirty_asof:
            return
        if self.dirty_bytes > self.background_threshold:
            cadence_ns = self.tunables.dirty_writeback_centisecs * 10 * NS_PER_MS
            steps = (now - self._dirty_asof) // cadence_ns
            if steps:
                drained = steps * cadence_ns * self.drain_rate // NS_PER_SEC
                self.dirty_bytes = max(self.background_threshold, self.dirty_bytes - drained)
                self._dirty_asof += steps * cadence_ns
            # keep the cadence anchor while draining so partial intervals add up
            return
        self._dirty_asof = now

    def accumulate_dirty(self, nbytes: int, now: int) -> None:
        if nbytes < 0:
            raise ValueError("dirty bytes must be non-negative")
        self._settle(now)
        self.dirty_bytes += nbytes

    def begin_writeback_burst(self, flushed_bytes: int, now: int) -> int:
        """Flush `flushed_bytes` plus accumulated dirty bytes; returns the
        contention window length in ns (0 when there is nothing to drain)."""
        self._settle(now)
        burst = min(self.dirty_bytes + flushed_bytes, self.dirty_cap)
        self.dirty_bytes = 0
        self._dirty_asof = now
        if burst <= 0:
            return 0
        # Back-to-back bursts extend the open window: the drain is a single
        # backlog, not independent timers.
        backlog_ns = 0
        if self.contention_until > now:
            backlog_ns = self.contention_until - now
        window = backlog_ns + burst * NS_PER_SEC // self.drain_rate
        self.contention_until = now + window
        self.window_log.append((now, self.contention_until, burst))
        return self.contention_until - now


def sample_fsync(
    device: DeviceModel, layer: BlockLayer, rng: random.Random, now: int
) -> tuple[int, bool]:
    """One fdatasync duration draw in ns, plus whether it was degraded.

    Degraded draws are uniform over the layer's band; baseline draws are
    lognormal with median fsync_p50 and spread fsync_sigma.
    """
    if device.block_layer_id != layer.layer_id:
        raise ValueError(
            f"device {device.device_id} is on layer {device.block_layer_id}, "
            f"not {layer.layer_id}"
        )
    if layer.contended(now):
        return int(round(rng.uniform(layer.degraded_lo_ns, layer.degraded_hi_ns))), True
    if device.fsync_sigma == 0.0:
        return device.fsync_p50_ns, False
    draw = rng.lognormvariate(math.log(device.fsync_p50_ns), device.fsync_sigma)
    return max(1, int(round(draw))), False
