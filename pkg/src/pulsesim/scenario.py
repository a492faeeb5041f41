"""Scenario configuration: parsing, validation, presets, report emission.

File format (complete grammar)
------------------------------
Line-oriented text. Blank lines and `#` comments are ignored; a trailing
`# comment` is stripped from any line. Section headers are `[kind]` or
`[kind id]`; every other line is `key = value`.

Singleton sections: `[sim]`, `[producer]`, `[topology]`, `[ensemble]`,
`[dispatch]`, `[key_shared]`, `[bundles]` (optional), `[federation]`
(optional). Id'd sections, one per entity: `[block_layer ID]`, `[device ID]`,
`[broker ID]`, `[bookie ID]`.

Value types:
  duration   decimal number + ns|us|ms|s|m suffix (m = minutes), exact
  bytes      decimal number + B|KiB|MiB|GiB suffix (binary multiples)
  bandwidth  decimal number + bps|Kbps|Mbps|Gbps suffix (decimal multiples)
  byte rate  bytes suffixed with /s, e.g. 1GiB/s
  int/float/bool/str as expected; bool is true|false

`[federation]` repeats `range = <cluster_id> <lo> <hi>` lines (inclusive
partition bounds) and takes `mode = hash|literal`. Every broker, bookie,
device and block layer carries `cluster = <id>` (default `default`); the
cluster ids must exactly match the federation ranges when a federation map is
present.

Parsing reports every error it can find, each with its line number, rather
than stopping at the first.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path

from .broker import EnsembleConfig
from .jvm import GcModel, g1_like, none_model, zgc_like
from .metrics import SimReport, decompose
from .routing import FederationRange, validate_federation
from .storage import OsTunables

NS = {"ns": 1, "us": 10**3, "ms": 10**6, "s": 10**9, "m": 60 * 10**9}
BYTES = {"B": 1, "KiB": 1 << 10, "MiB": 1 << 20, "GiB": 1 << 30}
BITS_PER_S = {"bps": 1, "Kbps": 10**3, "Mbps": 10**6, "Gbps": 10**9}


class ScenarioError(Exception):
    """Carries the full list of validation/parse errors, not just the first."""

    def __init__(self, errors: list[str]) -> None:
        self.errors = errors
        super().__init__("\n".join(errors))


def _parse_scaled(text: str, units: dict[str, int], what: str) -> int:
    text = text.strip()
    for suffix in sorted(units, key=len, reverse=True):
        if text.endswith(suffix):
            number = text[: -len(suffix)].strip()
            try:
                value = Decimal(number) * units[suffix]
            except InvalidOperation:
                raise ValueError(f"bad {what} {text!r}")
            if value != value.to_integral_value():
                raise ValueError(f"{what} {text!r} is not a whole base unit")
            if value < 0:
                raise ValueError(f"{what} must be non-negative")
            return int(value)
    raise ValueError(f"{what} {text!r} needs a unit suffix ({'/'.join(units)})")


def parse_duration(text: str) -> int:
    return _parse_scaled(text, NS, "duration")


def parse_bytes(text: str) -> int:
    return _parse_scaled(text, BYTES, "byte count")


def parse_bandwidth(text: str) -> int:
    return _parse_scaled(text, BITS_PER_S, "bandwidth")


def parse_byte_rate(text: str) -> int:
    text = text.strip()
    if not text.endswith("/s"):
        raise ValueError(f"byte rate {text!r} needs a /s suffix")
    return parse_bytes(text[:-2])


def _fmt_scaled(value: int, units: list[tuple[str, int]]) -> str:
    for suffix, mult in units:
        if value % mult == 0:
            return f"{value // mult}{suffix}"
    raise AssertionError


def fmt_duration(ns: int) -> str:
    return _fmt_scaled(ns, [("s", 10**9), ("ms", 10**6), ("us", 10**3), ("ns", 1)])


def fmt_bytes(n: int) -> str:
    return _fmt_scaled(n, [("GiB", 1 << 30), ("MiB", 1 << 20), ("KiB", 1 << 10), ("B", 1)])


def fmt_bandwidth(bps: int) -> str:
    return _fmt_scaled(bps, [("Gbps", 10**9), ("Mbps", 10**6), ("Kbps", 10**3), ("bps", 1)])


def parse_bool(text: str) -> bool:
    if text == "true":
        return True
    if text == "false":
        return False
    raise ValueError(f"expected true or false, got {text!r}")


# --- configuration dataclasses -----------------------------------------------


@dataclass(frozen=True)
class ProducerSpec:
    rate_per_s: int = 1000
    message_bytes: int = 700
    keys: int = 10000
    key_dist: str = "uniform"  # uniform | zipf:<alpha>
    jitter_ns: int = 0


@dataclass(frozen=True)
class DispatchSpec:
    enabled: bool = True
    proc_p50_ns: int = 10_600_000
    proc_sigma: float = 0.25


@dataclass(frozen=True)
class KeySharedSpec:
    consumers: int = 4
    churn_events: int = 0


@dataclass(frozen=True)
class BundleSpec:
    num_bundles: int = 256
    split_threshold_per_s: float = 100000.0
    check_interval_ns: int = 10**9


@dataclass(frozen=True)
class FederationSpec:
    mode: str = "hash"
    ranges: tuple[FederationRange, ...] = ()


@dataclass(frozen=True)
class BlockLayerSpec:
    layer_id: str
    cluster: str = "default"
    total_ram_bytes: int = 64 << 30
    drain_rate_bytes_per_s: int = 1 << 30
    tunables: OsTunables = field(default_factory=OsTunables)
    degraded_lo_ns: int = 15 * 10**6
    degraded_hi_ns: int = 22 * 10**6


@dataclass(frozen=True)
class DeviceSpec:
    device_id: str
    block_layer: str
    cluster: str = "default"
    tier: str = "new_nvme"
    fsync_p50_ns: int | None = None
    fsync_sigma: float = 0.25


@dataclass(frozen=True)
class BrokerSpec:
    broker_id: str
    cluster: str = "default"
    nic_bandwidth_bps: int = 10**10
    nic_rtt_ns: int = 0
    proc_p50_ns: int = 1_000_000
    proc_sigma: float = 0.25
    gc: GcModel = field(default_factory=none_model)


@dataclass(frozen=True)
class BookieSpec:
    bookie_id: str
    journal_device: str
    ledger_device: str
    cluster: str = "default"
    proc_p50_ns: int = 1_860_000
    proc_sigma: float = 0.25
    group_wait_ns: int = 1_000_000
    group_max_entries: int = 500
    flush_interval_ns: int = 30 * 10**9
    cache_pressure_per_gib_ns: int = 0
    gc: GcModel = field(default_factory=none_model)


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "scenario"
    duration_ns: int = 60 * 10**9
    seed: int = 1
    producer: ProducerSpec = field(default_factory=ProducerSpec)
    partitions: int = 128
    ensemble: EnsembleConfig = field(default_factory=lambda: EnsembleConfig(3, 2, 2))
    dispatch: DispatchSpec = field(default_factory=DispatchSpec)
    key_shared: KeySharedSpec = field(default_factory=KeySharedSpec)
    bundles: BundleSpec | None = None
    federation: FederationSpec | None = None
    block_layers: tuple[BlockLayerSpec, ...] = ()
    devices: tuple[DeviceSpec, ...] = ()
    brokers: tuple[BrokerSpec, ...] = ()
    bookies: tuple[BookieSpec, ...] = ()

    def clusters(self) -> list[str]:
        seen: list[str] = []
        for spec in (*self.brokers, *self.bookies, *self.devices, *self.block_layers):
            if spec.cluster not in seen:
                seen.append(spec.cluster)
        return seen


# --- gc model <-> keys --------------------------------------------------------


def _gc_from_keys(kind: str, heap_gb: float, interval_ns: int | None, tail: float | None) -> GcModel:
    if kind == "none":
        return none_model()
    if kind == "g1_like":
        return g1_like(
            heap_gb=heap_gb,
            mean_interval_ns=interval_ns if interval_ns is not None else 30 * 10**9,
            tail_frac=tail if tail is not None else 0.01,
        )
    if kind == "zgc_like":
        return zgc_like(
            heap_gb=heap_gb,
            mean_interval_ns=interval_ns if interval_ns is not None else 10 * 10**9,
        )
    raise ValueError(f"unknown gc kind {kind!r}")


def _gc_lines(gc: GcModel) -> list[str]:
    if gc.kind == "none":
        return ["gc = none"]
    lines = [
        f"gc = {gc.kind}",
        f"gc_heap_gb = {gc.heap_gb!r}",
        f"gc_mean_interval = {fmt_duration(gc.mean_interval_ns)}",
    ]
    if gc.kind == "g1_like":
        lines.append(f"gc_tail_frac = {gc.tail_frac!r}")
    return lines


# --- parser --------------------------------------------------------------------


class _Section:
    def __init__(self, line_no: int, kind: str, ident: str | None) -> None:
        self.line_no = line_no
        self.kind = kind
        self.ident = ident
        self.items: list[tuple[int, str, str]] = []


def _split_sections(text: str, errors: list[str]) -> list[_Section]:
    sections: list[_Section] = []
    current: _Section | None = None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            parts = line[1:-1].split()
            if len(parts) == 1:
                current = _Section(no, parts[0], None)
            elif len(parts) == 2:
                current = _Section(no, parts[0], parts[1])
            else:
                errors.append(f"line {no}: malformed section header {line!r}")
                current = None
                continue
            sections.append(current)
        elif "=" in line:
            if current is None:
                errors.append(f"line {no}: key outside any section")
                continue
            key, _, value = line.partition("=")
            current.items.append((no, key.strip(), value.strip()))
        else:
            errors.append(f"line {no}: expected 'key = value' or a [section] header")
    return sections


class _KeyReader:
    """Reads one section's keys with typed parsers, recording errors by line."""

    def __init__(self, section: _Section, errors: list[str]) -> None:
        self.section = section
        self.errors = errors
        self.values: dict[str, tuple[int, str]] = {}
        self.multi: dict[str, list[tuple[int, str]]] = {}
        for no, key, value in section.items:
            if key == "range":
                self.multi.setdefault(key, []).append((no, value))
            elif key in self.values:
                errors.append(f"line {no}: duplicate key {key!r}")
            else:
                self.values[key] = (no, value)
        self.seen: set[str] = set()

    def get(self, key: str, parser, default=None, required: bool = False):
        self.seen.add(key)
        entry = self.values.get(key)
        if entry is None:
            if required:
                self.errors.append(
                    f"line {self.section.line_no}: section [{self._name()}] missing key {key!r}"
                )
            return default
        no, raw = entry
        try:
            return parser(raw)
        except ValueError as exc:
            self.errors.append(f"line {no}: {key}: {exc}")
            return default

    def finish(self) -> None:
        for key, (no, _) in self.values.items():
            if key not in self.seen:
                self.errors.append(f"line {no}: unknown key {key!r} in [{self._name()}]")

    def _name(self) -> str:
        s = self.section
        return s.kind if s.ident is None else f"{s.kind} {s.ident}"

    def gc_model(self) -> GcModel:
        kind = self.get("gc", str, default="none")
        heap = self.get("gc_heap_gb", float, default=32.0)
        interval = self.get("gc_mean_interval", parse_duration, default=None)
        tail = self.get("gc_tail_frac", float, default=None)
        try:
            return _gc_from_keys(kind, heap, interval, tail)
        except ValueError as exc:
            self.errors.append(f"line {self.section.line_no}: {exc}")
            return none_model()


def parse_scenario(text: str) -> ScenarioConfig:
    """Parse and validate; raises ScenarioError listing every problem found."""
    errors: list[str] = []
    sections = _split_sections(text, errors)

    singles: dict[str, _Section] = {}
    layers: list[BlockLayerSpec] = []
    devices: list[DeviceSpec] = []
    brokers: list[BrokerSpec] = []
    bookies: list[BookieSpec] = []

    for sec in sections:
        if sec.kind in ("sim", "producer", "topology", "ensemble", "dispatch",
                        "key_shared", "bundles", "federation"):
            if sec.ident is not None:
                errors.append(f"line {sec.line_no}: [{sec.kind}] takes no id")
            if sec.kind in singles:
                errors.append(f"line {sec.line_no}: duplicate [{sec.kind}] section")
            singles[sec.kind] = sec
        elif sec.kind in ("block_layer", "device", "broker", "bookie"):
            if sec.ident is None:
                errors.append(f"line {sec.line_no}: [{sec.kind}] needs an id")
                continue
        else:
            errors.append(f"line {sec.line_no}: unknown section [{sec.kind}]")
            continue

    def reader(kind: str) -> _KeyReader | None:
        sec = singles.get(kind)
        return None if sec is None else _KeyReader(sec, errors)

    name, duration, seed = "scenario", 60 * 10**9, 1
    r = reader("sim")
    if r:
        name = r.get("name", str, default="scenario")
        duration = r.get("duration", parse_duration, default=60 * 10**9)
        seed = r.get("seed", int, default=1)
        r.finish()

    producer = ProducerSpec()
    r = reader("producer")
    if r:
        producer = ProducerSpec(
            rate_per_s=r.get("rate", int, default=1000),
            message_bytes=r.get("message_bytes", parse_bytes, default=700),
            keys=r.get("keys", int, default=10000),
            key_dist=r.get("key_dist", str, default="uniform"),
            jitter_ns=r.get("jitter", parse_duration, default=0),
        )
        r.finish()

    partitions = 128
    r = reader("topology")
    if r:
        partitions = r.get("partitions", int, default=128)
        r.finish()

    ensemble = EnsembleConfig(3, 2, 2)
    r = reader("ensemble")
    if r:
        e = r.get("e", int, default=3)
        qw = r.get("qw", int, default=2)
        qa = r.get("qa", int, default=2)
        r.finish()
        try:
            ensemble = EnsembleConfig(e, qw, qa)
        except ValueError as exc:
            errors.append(f"line {singles['ensemble'].line_no}: {exc}")

    dispatch = DispatchSpec()
    r = reader("dispatch")
    if r:
        dispatch = DispatchSpec(
            enabled=r.get("enabled", parse_bool, default=True),
            proc_p50_ns=r.get("proc_p50", parse_duration, default=10_600_000),
            proc_sigma=r.get("proc_sigma", float, default=0.25),
        )
        r.finish()

    key_shared = KeySharedSpec()
    r = reader("key_shared")
    if r:
        key_shared = KeySharedSpec(
            consumers=r.get("consumers", int, default=4),
            churn_events=r.get("churn_events", int, default=0),
        )
        r.finish()

    bundles = None
    r = reader("bundles")
    if r:
        bundles = BundleSpec(
            num_bundles=r.get("num_bundles", int, default=256),
            split_threshold_per_s=r.get("split_threshold", float, default=100000.0),
            check_interval_ns=r.get("check_interval", parse_duration, default=10**9),
        )
        r.finish()

    federation = None
    r = reader("federation")
    if r:
        mode = r.get("mode", str, default="hash")
        ranges: list[FederationRange] = []
        for no, raw in r.multi.get("range", []):
            parts = raw.split()
            if len(parts) != 3:
                errors.append(f"line {no}: range needs '<cluster> <lo> <hi>'")
                continue
            try:
                ranges.append(FederationRange(parts[0], int(parts[1]), int(parts[2])))
            except ValueError:
                errors.append(f"line {no}: range bounds must be integers")
        r.finish()
        federation = FederationSpec(mode=mode, ranges=tuple(ranges))

    for sec in sections:
        if sec.ident is None:
            continue
        r = _KeyReader(sec, errors)
        cluster = r.get("cluster", str, default="default")
        if sec.kind == "block_layer":
            try:
                tunables = OsTunables(
                    dirty_ratio=r.get("dirty_ratio", int, default=40),
                    dirty_background_ratio=r.get("dirty_background_ratio", int, default=10),
                    dirty_expire_centisecs=r.get("dirty_expire_centisecs", int, default=3000),
                    dirty_writeback_centisecs=r.get("dirty_writeback_centisecs", int, default=500),
                )
            except ValueError as exc:
                errors.append(f"line {sec.line_no}: {exc}")
                tunables = OsTunables()
            layers.append(
                BlockLayerSpec(
                    layer_id=sec.ident,
                    cluster=cluster,
                    total_ram_bytes=r.get("total_ram", parse_bytes, default=64 << 30),
                    drain_rate_bytes_per_s=r.get("drain_rate", parse_byte_rate, default=1 << 30),
                    tunables=tunables,
                    degraded_lo_ns=r.get("degraded_lo", parse_duration, default=15 * 10**6),
                    degraded_hi_ns=r.get("degraded_hi", parse_duration, default=22 * 10**6),
                )
            )
        elif sec.kind == "device":
            devices.append(
                DeviceSpec(
                    device_id=sec.ident,
                    cluster=cluster,
                    tier=r.get("tier", str, default="new_nvme"),
                    block_layer=r.get("block_layer", str, default="", required=True) or "",
                    fsync_p50_ns=r.get("fsync_p50", parse_duration, default=None),
                    fsync_sigma=r.get("fsync_sigma", float, default=0.25),
                )
            )
        elif sec.kind == "broker":
            brokers.append(
                BrokerSpec(
                    broker_id=sec.ident,
                    cluster=cluster,
                    nic_bandwidth_bps=r.get("nic_bandwidth", parse_bandwidth, default=10**10),
                    nic_rtt_ns=r.get("nic_rtt", parse_duration, default=0),
                    proc_p50_ns=r.get("proc_p50", parse_duration, default=1_000_000),
                    proc_sigma=r.get("proc_sigma", float, default=0.25),
                    gc=r.gc_model(),
                )
            )
        elif sec.kind == "bookie":
            bookies.append(
                BookieSpec(
                    bookie_id=sec.ident,
                    cluster=cluster,
                    journal_device=r.get("journal_device", str, default="", required=True) or "",
                    ledger_device=r.get("ledger_device", str, default="", required=True) or "",
                    proc_p50_ns=r.get("proc_p50", parse_duration, default=1_860_000),
                    proc_sigma=r.get("proc_sigma", float, default=0.25),
                    group_wait_ns=r.get("group_wait", parse_duration, default=1_000_000),
                    group_max_entries=r.get("group_max_entries", int, default=500),
                    flush_interval_ns=r.get("flush_interval", parse_duration, default=30 * 10**9),
                    cache_pressure_per_gib_ns=r.get(
                        "cache_pressure_per_gib", parse_duration, default=0
                    ),
                    gc=r.gc_model(),
                )
            )
        r.finish()

    config = ScenarioConfig(
        name=name,
        duration_ns=duration,
        seed=seed,
        producer=producer,
        partitions=partitions,
        ensemble=ensemble,
        dispatch=dispatch,
        key_shared=key_shared,
        bundles=bundles,
        federation=federation,
        block_layers=tuple(layers),
        devices=tuple(devices),
        brokers=tuple(brokers),
        bookies=tuple(bookies),
    )
    errors.extend(validate_config(config))
    if errors:
        raise ScenarioError(errors)
    return config


def validate_config(config: ScenarioConfig) -> list[str]:
    """Every invariant violation in the config; empty when runnable."""
    errors: list[str] = []
    if config.duration_ns <= 0:
        errors.append("duration must be positive")
    if config.seed < 0:
        errors.append("seed must be non-negative")
    p = config.producer
    if p.rate_per_s < 0:
        errors.append("producer rate must be non-negative")
    if p.message_bytes <= 0:
        errors.append("message_bytes must be positive")
    if p.keys < 1:
        errors.append("producer needs at least one key")
    if p.key_dist != "uniform":
        if not p.key_dist.startswith("zipf:"):
            errors.append(f"unknown key_dist {p.key_dist!r} (uniform or zipf:<alpha>)")
        else:
            try:
                if float(p.key_dist[5:]) <= 0:
                    errors.append("zipf alpha must be positive")
            except ValueError:
                errors.append(f"bad zipf alpha in {p.key_dist!r}")
    if config.partitions < 1:
        errors.append("partitions must be at least 1")
    if config.dispatch.enabled:
        if config.dispatch.proc_p50_ns <= 0:
            errors.append("dispatch proc_p50 must be positive when dispatch is enabled")
        if config.key_shared.consumers < 1:
            errors.append("dispatch needs at least one Key_Shared consumer")

    layer_by_id: dict[str, BlockLayerSpec] = {}
    ids_seen: dict[str, str] = {}

    def check_unique(kind: str, ident: str) -> None:
        if ident in ids_seen:
            errors.append(f"{kind} id {ident!r} already used by a {ids_seen[ident]}")
        else:
            ids_seen[ident] = kind

    for layer in config.block_layers:
        check_unique("block_layer", layer.layer_id)
        layer_by_id[layer.layer_id] = layer
        if layer.total_ram_bytes <= 0:
            errors.append(f"block_layer {layer.layer_id}: total_ram must be positive")
        if layer.drain_rate_bytes_per_s <= 0:
            errors.append(f"block_layer {layer.layer_id}: drain_rate must be positive")
        if not layer.degraded_lo_ns < layer.degraded_hi_ns:
            errors.append(f"block_layer {layer.layer_id}: degraded_lo must be < degraded_hi")

    device_by_id: dict[str, DeviceSpec] = {}
    for dev in config.devices:
        check_unique("device", dev.device_id)
        device_by_id[dev.device_id] = dev
        if dev.tier not in ("new_nvme", "worn_nvme", "worn_ssd", "custom"):
            errors.append(f"device {dev.device_id}: unknown tier {dev.tier!r}")
        if dev.tier == "custom" and dev.fsync_p50_ns is None:
            errors.append(f"device {dev.device_id}: custom tier requires fsync_p50")
        if dev.fsync_p50_ns is not None and dev.fsync_p50_ns <= 0:
            errors.append(f"device {dev.device_id}: fsync_p50 must be positive")
        layer = layer_by_id.get(dev.block_layer)
        if layer is None:
            errors.append(f"device {dev.device_id}: unknown block_layer {dev.block_layer!r}")
        elif layer.cluster != dev.cluster:
            errors.append(
                f"device {dev.device_id} (cluster {dev.cluster}) references block_layer "
                f"{dev.block_layer} in cluster {layer.cluster}"
            )

    cluster_brokers: dict[str, int] = {}
    for b in config.brokers:
        check_unique("broker", b.broker_id)
        cluster_brokers[b.cluster] = cluster_brokers.get(b.cluster, 0) + 1
        if b.nic_bandwidth_bps <= 0:
            errors.append(f"broker {b.broker_id}: nic_bandwidth must be positive")
        if b.proc_p50_ns <= 0:
            errors.append(f"broker {b.broker_id}: proc_p50 must be positive")

    cluster_bookies: dict[str, int] = {}
    for bk in config.bookies:
        check_unique("bookie", bk.bookie_id)
        cluster_bookies[bk.cluster] = cluster_bookies.get(bk.cluster, 0) + 1
        if bk.proc_p50_ns <= 0:
            errors.append(f"bookie {bk.bookie_id}: proc_p50 must be positive")
        if bk.group_wait_ns <= 0:
            errors.append(f"bookie {bk.bookie_id}: group_wait must be positive")
        if bk.group_max_entries < 1:
            errors.append(f"bookie {bk.bookie_id}: group_max_entries must be at least 1")
        if bk.flush_interval_ns <= 0:
            errors.append(f"bookie {bk.bookie_id}: flush_interval must be positive")
        if bk.cache_pressure_per_gib_ns < 0:
            errors.append(f"bookie {bk.bookie_id}: cache_pressure_per_gib must be >= 0")
        for role, dev_id in (("journal", bk.journal_device), ("ledger", bk.ledger_device)):
            dev = device_by_id.get(dev_id)
            if dev is None:
                errors.append(f"bookie {bk.bookie_id}: unknown {role}_device {dev_id!r}")
            elif dev.cluster != bk.cluster:
                errors.append(
                    f"bookie {bk.bookie_id} (cluster {bk.cluster}) uses device {dev_id} "
                    f"in cluster {dev.cluster}"
                )

    if not config.brokers:
        errors.append("at least one broker is required")
    if not config.bookies:
        errors.append("at least one bookie is required")

    clusters = set(cluster_brokers) | set(cluster_bookies)
    for cluster in sorted(clusters):
        if cluster_brokers.get(cluster, 0) < 1:
            errors.append(f"cluster {cluster}: needs at least one broker")
        if cluster_bookies.get(cluster, 0) < config.ensemble.e:
            errors.append(
                f"cluster {cluster}: has {cluster_bookies.get(cluster, 0)} bookies but the "
                f"ensemble needs e={config.ensemble.e}"
            )

    if config.federation is not None:
        fed_errors = validate_federation(config.partitions, list(config.federation.ranges))
        errors.extend(f"federation: {e}" for e in fed_errors)
        if not fed_errors:
            fed_clusters = {r.cluster_id for r in config.federation.ranges}
            if clusters and fed_clusters != clusters:
                errors.append(
                    f"federation clusters {sorted(fed_clusters)} do not match topology "
                    f"clusters {sorted(clusters)}"
                )
        if config.federation.mode not in ("hash", "literal"):
            errors.append(f"federation: unknown mode {config.federation.mode!r}")
    elif len(clusters) > 1:
        errors.append("multiple clusters require a [federation] section")

    return errors


# --- serializer -----------------------------------------------------------------


def serialize(config: ScenarioConfig) -> str:
    out: list[str] = ["# pulse-sim scenario", "[sim]"]
    out.append(f"name = {config.name}")
    out.append(f"duration = {fmt_duration(config.duration_ns)}")
    out.append(f"seed = {config.seed}")

    p = config.producer
    out += [
        "",
        "[producer]",
        f"rate = {p.rate_per_s}",
        f"message_bytes = {fmt_bytes(p.message_bytes)}",
        f"keys = {p.keys}",
        f"key_dist = {p.key_dist}",
        f"jitter = {fmt_duration(p.jitter_ns)}",
    ]
    out += ["", "[topology]", f"partitions = {config.partitions}"]
    e = config.ensemble
    out += ["", "[ensemble]", f"e = {e.e}", f"qw = {e.qw}", f"qa = {e.qa}"]
    d = config.dispatch
    out += [
        "",
        "[dispatch]",
        f"enabled = {'true' if d.enabled else 'false'}",
        f"proc_p50 = {fmt_duration(d.proc_p50_ns)}",
        f"proc_sigma = {d.proc_sigma!r}",
    ]
    ks = config.key_shared
    out += [
        "",
        "[key_shared]",
        f"consumers = {ks.consumers}",
        f"churn_events = {ks.churn_events}",
    ]
    if config.bundles is not None:
        b = config.bundles
        out += [
            "",
            "[bundles]",
            f"num_bundles = {b.num_bundles}",
            f"split_threshold = {b.split_threshold_per_s!r}",
            f"check_interval = {fmt_duration(b.check_interval_ns)}",
        ]
    if config.federation is not None:
        out += ["", "[federation]", f"mode = {config.federation.mode}"]
        for r in config.federation.ranges:
            out.append(f"range = {r.cluster_id} {r.lo} {r.hi}")
    for layer in config.block_layers:
        t = layer.tunables
        out += [
            "",
            f"[block_layer {layer.layer_id}]",
            f"cluster = {layer.cluster}",
            f"total_ram = {fmt_bytes(layer.total_ram_bytes)}",
            f"drain_rate = {fmt_bytes(layer.drain_rate_bytes_per_s)}/s",
            f"dirty_ratio = {t.dirty_ratio}",
            f"dirty_background_ratio = {t.dirty_background_ratio}",
            f"dirty_expire_centisecs = {t.dirty_expire_centisecs}",
            f"dirty_writeback_centisecs = {t.dirty_writeback_centisecs}",
            f"degraded_lo = {fmt_duration(layer.degraded_lo_ns)}",
            f"degraded_hi = {fmt_duration(layer.degraded_hi_ns)}",
        ]
    for dev in config.devices:
        out += [
            "",
            f"[device {dev.device_id}]",
            f"cluster = {dev.cluster}",
            f"tier = {dev.tier}",
            f"block_layer = {dev.block_layer}",
        ]
        if dev.fsync_p50_ns is not None:
            out.append(f"fsync_p50 = {fmt_duration(dev.fsync_p50_ns)}")
        out.append(f"fsync_sigma = {dev.fsync_sigma!r}")
    for b in config.brokers:
        out += [
            "",
            f"[broker {b.broker_id}]",
            f"cluster = {b.cluster}",
            f"nic_bandwidth = {fmt_bandwidth(b.nic_bandwidth_bps)}",
            f"nic_rtt = {fmt_duration(b.nic_rtt_ns)}",
            f"proc_p50 = {fmt_duration(b.proc_p50_ns)}",
            f"proc_sigma = {b.proc_sigma!r}",
            *_gc_lines(b.gc),
        ]
    for bk in config.bookies:
        out += [
            "",
            f"[bookie {bk.bookie_id}]",
            f"cluster = {bk.cluster}",
            f"journal_device = {bk.journal_device}",
            f"ledger_device = {bk.ledger_device}",
            f"proc_p50 = {fmt_duration(bk.proc_p50_ns)}",
            f"proc_sigma = {bk.proc_sigma!r}",
            f"group_wait = {fmt_duration(bk.group_wait_ns)}",
            f"group_max_entries = {bk.group_max_entries}",
            f"flush_interval = {fmt_duration(bk.flush_interval_ns)}",
            f"cache_pressure_per_gib = {fmt_duration(bk.cache_pressure_per_gib_ns)}",
            *_gc_lines(bk.gc),
        ]
    return "\n".join(out) + "\n"


# --- overrides (sweep support) ----------------------------------------------------


def apply_override(config: ScenarioConfig, key: str, raw: str) -> ScenarioConfig:
    """Apply `key=raw` to every section carrying that key; a `section-id.key`
    form targets one entity. Unknown keys are errors."""
    ident = None
    if "." in key:
        ident, key = key.split(".", 1)

    def match(spec_id: str) -> bool:
        return ident is None or ident == spec_id

    replaced = False

    def rep(obj, **kw):
        nonlocal replaced
        replaced = True
        return dataclasses.replace(obj, **kw)

    if ident is None and key in ("duration", "seed"):
        config = rep(config, **{"duration_ns" if key == "duration" else "seed":
                                parse_duration(raw) if key == "duration" else int(raw)})
    elif ident is None and key in ("rate", "message_bytes", "keys", "key_dist", "jitter"):
        p = config.producer
        if key == "rate":
            p = rep(p, rate_per_s=int(raw))
        elif key == "message_bytes":
            p = rep(p, message_bytes=parse_bytes(raw))
        elif key == "keys":
            p = rep(p, keys=int(raw))
        elif key == "key_dist":
            p = rep(p, key_dist=raw)
        else:
            p = rep(p, jitter_ns=parse_duration(raw))
        config = dataclasses.replace(config, producer=p)
    elif ident is None and key in ("e", "qw", "qa"):
        e = dataclasses.asdict(config.ensemble)
        e[key] = int(raw)
        replaced = True
        config = dataclasses.replace(config, ensemble=EnsembleConfig(**e))
    elif ident is None and key in ("consumers", "churn_events"):
        ks = rep(config.key_shared, **{key: int(raw)})
        config = dataclasses.replace(config, key_shared=ks)
    elif key in ("flush_interval", "group_wait", "group_max_entries", "cache_pressure_per_gib"):
        attr = {
            "flush_interval": ("flush_interval_ns", parse_duration),
            "group_wait": ("group_wait_ns", parse_duration),
            "group_max_entries": ("group_max_entries", int),
            "cache_pressure_per_gib": ("cache_pressure_per_gib_ns", parse_duration),
        }[key]
        bookies = tuple(
            rep(bk, **{attr[0]: attr[1](raw)}) if match(bk.bookie_id) else bk
            for bk in config.bookies
        )
        config = dataclasses.replace(config, bookies=bookies)
    elif key in ("nic_bandwidth", "nic_rtt"):
        attr, parser = (
            ("nic_bandwidth_bps", parse_bandwidth) if key == "nic_bandwidth"
            else ("nic_rtt_ns", parse_duration)
        )
        brokers = tuple(
            rep(b, **{attr: parser(raw)}) if match(b.broker_id) else b for b in config.brokers
        )
        config = dataclasses.replace(config, brokers=brokers)
    elif key in ("dirty_ratio", "dirty_background_ratio", "total_ram", "drain_rate"):
        layers = []
        for layer in config.block_layers:
            if not match(layer.layer_id):
                layers.append(layer)
                continue
            if key == "total_ram":
                layers.append(rep(layer, total_ram_bytes=parse_bytes(raw)))
            elif key == "drain_rate":
                layers.append(rep(layer, drain_rate_bytes_per_s=parse_byte_rate(raw)))
            else:
                t = dataclasses.asdict(layer.tunables)
                t[key] = int(raw)
                layers.append(rep(layer, tunables=OsTunables(**t)))
        config = dataclasses.replace(config, block_layers=tuple(layers))
    elif key == "tier":
        devices = tuple(
            rep(d, tier=raw) if match(d.device_id) else d for d in config.devices
        )
        config = dataclasses.replace(config, devices=devices)
    elif key == "proc_p50":
        value = parse_duration(raw)
        config = dataclasses.replace(
            config,
            brokers=tuple(
                rep(b, proc_p50_ns=value) if match(b.broker_id) else b for b in config.brokers
            ),
            bookies=tuple(
                rep(bk, proc_p50_ns=value) if match(bk.bookie_id) else bk for bk in config.bookies
            ),
        )
    else:
        raise ScenarioError([f"unknown or unsupported override key {key!r}"])
    if not replaced:
        raise ScenarioError([f"override {key!r}: no matching section"])
    errors = validate_config(config)
    if errors:
        raise ScenarioError(errors)
    return config
