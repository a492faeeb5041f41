"""Publish path pieces: ensemble quorum config, NIC serialization and queueing,
broker processing model."""

from __future__ import annotations

from dataclasses import dataclass

from .engine import NS_PER_SEC


@dataclass(frozen=True)
class EnsembleConfig:
    e: int
    qw: int
    qa: int

    def __post_init__(self) -> None:
        if not (self.e >= self.qw >= self.qa >= 1):
            raise ValueError(
                f"ensemble invariant violated: need e >= qw >= qa >= 1, "
                f"got e={self.e}, qw={self.qw}, qa={self.qa}"
            )


@dataclass(frozen=True)
class NicModel:
    bandwidth_bps: int
    base_rtt_ns: int = 0

    def __post_init__(self) -> None:
        if self.bandwidth_bps <= 0:
            raise ValueError("bandwidth must be positive")
        if self.base_rtt_ns < 0:
            raise ValueError("base_rtt must be non-negative")

    def serialization_ns(self, bits: int) -> int:
        return (bits * NS_PER_SEC + self.bandwidth_bps - 1) // self.bandwidth_bps


class NicLink:
    """Work-conserving FIFO link: a message departs after all earlier queued
    bytes, and the departure rate never exceeds the bandwidth."""

    __slots__ = ("model", "busy_until")

    def __init__(self, model: NicModel) -> None:
        self.model = model
        self.busy_until = 0

    def transmit(self, enqueue_at: int, bits: int) -> int:
        start = enqueue_at if enqueue_at > self.busy_until else self.busy_until
        depart = start + self.model.serialization_ns(bits)
        self.busy_until = depart
        return depart


@dataclass(frozen=True)
class BrokerProcessing:
    p50_ns: int
    sigma: float


@dataclass(frozen=True)
class Message:
    """A published message as the routing layer sees it."""

    key: str
    size_bytes: int
    publish_at: int

    def __post_init__(self) -> None:
        if self.size_bytes <= 0:
            raise ValueError("message size must be positive")
