"""Preset scenario library: each experiment family as a runnable config.

Rates are desk-scaled from the measured systems (latency models unchanged;
queueing-coupled capacities scaled along with the rate). Presets are also
shipped as scenario files under `pulsesim/presets/`; `preset(name)` and the
file contents stay in lockstep (tested).
"""

from __future__ import annotations

from importlib import resources

from .broker import EnsembleConfig
from .jvm import g1_like, none_model, zgc_like
from .routing import FederationRange
from .scenario import (
    BlockLayerSpec,
    BookieSpec,
    BrokerSpec,
    BundleSpec,
    DeviceSpec,
    DispatchSpec,
    FederationSpec,
    KeySharedSpec,
    ProducerSpec,
    ScenarioConfig,
    parse_scenario,
    serialize,
)
from .storage import OsTunables

MS = 10**6
SEC = 10**9
GIB = 1 << 30
MIB = 1 << 20

TUNED = OsTunables(
    dirty_ratio=2, dirty_background_ratio=1, dirty_expire_centisecs=500,
    dirty_writeback_centisecs=100,
)
STOCK = OsTunables()

PAPER_FEDERATION = (
    FederationRange("cluster-1", 0, 25),
    FederationRange("cluster-2", 26, 51),
    FederationRange("cluster-3", 52, 77),
    FederationRange("cluster-4", 78, 102),
    FederationRange("cluster-5", 103, 127),
)


def _hosts(n, cluster="default", ram=64 * GIB, drain=GIB, tunables=STOCK, prefix="host"):
    return [
        BlockLayerSpec(
            layer_id=f"{prefix}-{k}", cluster=cluster, total_ram_bytes=ram,
            drain_rate_bytes_per_s=drain, tunables=tunables,
        )
        for k in range(n)
    ]


def _prod_baseline() -> ScenarioConfig:
    # Worn-SSD journals, old collector, stock kernel knobs: the 18.1 ms regime.
    # Rate is scaled into the sparse-arrival regime the serial journal needs
    # (each entry opens its own commit group and waits the full group window,
    # which is also what the measured per-component numbers describe).
    layers = _hosts(3)
    devices = []
    bookies = []
    for k in range(3):
        devices.append(DeviceSpec(f"journal-{k}", f"host-{k}", tier="worn_ssd", fsync_sigma=0.2))
        devices.append(DeviceSpec(f"ledger-{k}", f"host-{k}", tier="worn_ssd", fsync_sigma=0.2))
        bookies.append(
            BookieSpec(
                bookie_id=f"bookie-{k}",
                journal_device=f"journal-{k}",
                ledger_device=f"ledger-{k}",
                proc_p50_ns=6_500_000,
                proc_sigma=0.2,
                group_wait_ns=2 * MS,
                flush_interval_ns=60 * SEC,
                gc=g1_like(),
            )
        )
    brokers = [
        BrokerSpec(
            broker_id=f"broker-{k}", nic_bandwidth_bps=10**9,
            proc_p50_ns=4_500_000, proc_sigma=0.2, gc=g1_like(),
        )
        for k in range(5)
    ]
    return ScenarioConfig(
        name="prod-baseline",
        duration_ns=60 * SEC,
        seed=101,
        producer=ProducerSpec(rate_per_s=150),
        ensemble=EnsembleConfig(3, 2, 2),
        dispatch=DispatchSpec(enabled=True, proc_p50_ns=10_600_000),
        key_shared=KeySharedSpec(consumers=4),
        block_layers=tuple(layers),
        devices=tuple(devices),
        brokers=tuple(brokers),
        bookies=tuple(bookies),
    )


def _optimized() -> ScenarioConfig:
    # NVMe journals + sub-ms collector + 30 s flush + 1 ms group wait + tuned
    # kernel knobs; 1.5M msg/s scaled 30x down to 50k over 6 brokers/6 bookies.
    layers = _hosts(3, tunables=TUNED)
    devices = []
    bookies = []
    for k in range(6):
        host = f"host-{k // 2}"
        devices.append(DeviceSpec(f"journal-{k}", host, tier="new_nvme"))
        devices.append(DeviceSpec(f"ledger-{k}", host, tier="new_nvme"))
        bookies.append(
            BookieSpec(
                bookie_id=f"bookie-{k}",
                journal_device=f"journal-{k}",
                ledger_device=f"ledger-{k}",
                proc_p50_ns=1_860_000,
                group_wait_ns=1 * MS,
                flush_interval_ns=30 * SEC,
                gc=zgc_like(),
            )
        )
    brokers = [
        BrokerSpec(
            broker_id=f"broker-{k}", nic_bandwidth_bps=170 * 10**6,
            proc_p50_ns=1_000_000, gc=zgc_like(),
        )
        for k in range(6)
    ]
    return ScenarioConfig(
        name="optimized",
        duration_ns=60 * SEC,
        seed=202,
        producer=ProducerSpec(rate_per_s=50_000),
        ensemble=EnsembleConfig(3, 2, 2),
        dispatch=DispatchSpec(enabled=True, proc_p50_ns=10_600_000),
        key_shared=KeySharedSpec(consumers=8),
        block_layers=tuple(layers),
        devices=tuple(devices),
        brokers=tuple(brokers),
        bookies=tuple(bookies),
    )


def _flush_sweep(interval_s: int) -> ScenarioConfig:
    # Test-cluster calibration for the flush-interval experiment. Write-cache
    # occupancy pressure supplies the median coupling; the dirty cap (1% of a
    # 2 GiB host at a 100 MiB/s drain) makes short intervals spend a larger
    # fraction of time contended, which is the P99 side of the experiment.
    layers = _hosts(
        3, ram=2 * GIB, drain=100 * MIB,
        tunables=OsTunables(dirty_ratio=1, dirty_background_ratio=1,
                            dirty_expire_centisecs=500, dirty_writeback_centisecs=100),
    )
    devices = []
    bookies = []
    for k in range(3):
        devices.append(DeviceSpec(f"journal-{k}", f"host-{k}", tier="new_nvme"))
        devices.append(DeviceSpec(f"ledger-{k}", f"host-{k}", tier="new_nvme"))
        bookies.append(
            BookieSpec(
                bookie_id=f"bookie-{k}",
                journal_device=f"journal-{k}",
                ledger_device=f"ledger-{k}",
                proc_p50_ns=100_000,
                group_wait_ns=1 * MS,
                flush_interval_ns=interval_s * SEC,
                cache_pressure_per_gib_ns=12 * MS,
                gc=zgc_like(),
            )
        )
    brokers = [
        BrokerSpec(
            broker_id=f"broker-{k}", nic_bandwidth_bps=10**9,
            proc_p50_ns=300_000, gc=zgc_like(),
        )
        for k in range(3)
    ]
    return ScenarioConfig(
        name=f"flush-sweep-{interval_s}",
        duration_ns=60 * SEC,
        seed=303,
        producer=ProducerSpec(rate_per_s=5_000),
        ensemble=EnsembleConfig(3, 2, 2),
        dispatch=DispatchSpec(enabled=True, proc_p50_ns=10_600_000),
        key_shared=KeySharedSpec(consumers=4),
        block_layers=tuple(layers),
        devices=tuple(devices),
        brokers=tuple(brokers),
        bookies=tuple(bookies),
    )


def _gc_compare(config_letter: str) -> ScenarioConfig:
    # Isolates the collector variable: journals sit on their own block layers
    # so flush bursts cannot contaminate the pause comparison. A = old
    # collector everywhere, B = storage nodes on the sub-ms collector,
    # C = sub-ms everywhere. Same seed and workload across all three.
    g1 = g1_like(heap_gb=32, mean_interval_ns=15 * SEC, tail_frac=0.08)
    broker_gc = {"A": g1, "B": g1, "C": zgc_like()}[config_letter]
    bookie_gc = {"A": g1, "B": zgc_like(), "C": zgc_like()}[config_letter]
    layers = []
    devices = []
    bookies = []
    for k in range(3):
        layers.append(BlockLayerSpec(f"host-{k}-journal", total_ram_bytes=32 * GIB, tunables=TUNED))
        layers.append(BlockLayerSpec(f"host-{k}-data", total_ram_bytes=32 * GIB, tunables=TUNED))
        devices.append(DeviceSpec(f"journal-{k}", f"host-{k}-journal", tier="new_nvme"))
        devices.append(DeviceSpec(f"ledger-{k}", f"host-{k}-data", tier="new_nvme"))
        bookies.append(
            BookieSpec(
                bookie_id=f"bookie-{k}",
                journal_device=f"journal-{k}",
                ledger_device=f"ledger-{k}",
                proc_p50_ns=300_000,
                group_wait_ns=2 * MS,
                flush_interval_ns=60 * SEC,
                gc=bookie_gc,
            )
        )
    brokers = [
        BrokerSpec(
            broker_id=f"broker-{k}", nic_bandwidth_bps=10**9,
            proc_p50_ns=500_000, gc=broker_gc,
        )
        for k in range(3)
    ]
    return ScenarioConfig(
        name=f"gc-compare-{config_letter}",
        duration_ns=600 * SEC,
        seed=404,
        producer=ProducerSpec(rate_per_s=5_000),
        ensemble=EnsembleConfig(3, 2, 2),
        dispatch=DispatchSpec(enabled=True, proc_p50_ns=10_600_000),
        key_shared=KeySharedSpec(consumers=4),
        block_layers=tuple(layers),
        devices=tuple(devices),
        brokers=tuple(brokers),
        bookies=tuple(bookies),
    )


def _writeback_demo() -> ScenarioConfig:
    # Big entry-log bursts on a shared block layer with stock kernel knobs:
    # journal and ledger are separate NVMe devices, yet journal fsyncs degrade
    # to the 15-22 ms band during every flush window.
    layers = _hosts(1, ram=32 * GIB, tunables=STOCK)
    return ScenarioConfig(
        name="writeback-demo",
        duration_ns=150 * SEC,
        seed=505,
        producer=ProducerSpec(rate_per_s=5_000, message_bytes=10 * 1024),
        partitions=16,
        ensemble=EnsembleConfig(1, 1, 1),
        dispatch=DispatchSpec(enabled=False),
        key_shared=KeySharedSpec(consumers=0),
        block_layers=tuple(layers),
        devices=(
            DeviceSpec("journal-0", "host-0", tier="new_nvme"),
            DeviceSpec("ledger-0", "host-0", tier="new_nvme"),
        ),
        brokers=(
            BrokerSpec(
                broker_id="broker-0", nic_bandwidth_bps=10**10,
                proc_p50_ns=500_000, gc=none_model(),
            ),
        ),
        bookies=(
            BookieSpec(
                bookie_id="bookie-0",
                journal_device="journal-0",
                ledger_device="ledger-0",
                proc_p50_ns=500_000,
                group_wait_ns=1 * MS,
                flush_interval_ns=60 * SEC,
                gc=none_model(),
            ),
        ),
    )


def _nic_25g() -> ScenarioConfig:
    # Saturation demo at a desk-scaled 25 Gbps-class cap (250 Mbps): offered
    # load is 120% of the NIC, so achieved throughput pins at the link rate.
    # The flush interval equals the duration so no writeback window perturbs
    # the throughput count.
    layers = _hosts(1, tunables=TUNED)
    return ScenarioConfig(
        name="nic-25g",
        duration_ns=60 * SEC,
        seed=606,
        producer=ProducerSpec(rate_per_s=53_571),
        partitions=16,
        ensemble=EnsembleConfig(1, 1, 1),
        dispatch=DispatchSpec(enabled=False),
        key_shared=KeySharedSpec(consumers=0),
        block_layers=tuple(layers),
        devices=(
            DeviceSpec("journal-0", "host-0", tier="new_nvme"),
            DeviceSpec("ledger-0", "host-0", tier="new_nvme"),
        ),
        brokers=(
            BrokerSpec(
                broker_id="broker-0", nic_bandwidth_bps=250 * 10**6,
                proc_p50_ns=200_000, gc=none_model(),
            ),
        ),
        bookies=(
            BookieSpec(
                bookie_id="bookie-0",
                journal_device="journal-0",
                ledger_device="ledger-0",
                proc_p50_ns=200_000,
                group_wait_ns=1 * MS,
                flush_interval_ns=60 * SEC,
                gc=none_model(),
            ),
        ),
    )


def _federation_15m() -> ScenarioConfig:
    # Five independent clusters sharing one 128-partition topic by key range,
    # with Key_Shared churn and bundle auto-split enabled.
    layers = []
    devices = []
    brokers = []
    bookies = []
    for c in range(1, 6):
        cluster = f"cluster-{c}"
        layers.append(
            BlockLayerSpec(f"{cluster}-host", cluster=cluster, total_ram_bytes=64 * GIB,
                           tunables=TUNED)
        )
        for k in range(2):
            devices.append(
                DeviceSpec(f"{cluster}-journal-{k}", f"{cluster}-host", cluster=cluster,
                           tier="new_nvme")
            )
            devices.append(
                DeviceSpec(f"{cluster}-ledger-{k}", f"{cluster}-host", cluster=cluster,
                           tier="new_nvme")
            )
            brokers.append(
                BrokerSpec(
                    broker_id=f"{cluster}-broker-{k}", cluster=cluster,
                    nic_bandwidth_bps=10**9, proc_p50_ns=500_000, gc=zgc_like(),
                )
            )
            bookies.append(
                BookieSpec(
                    bookie_id=f"{cluster}-bookie-{k}",
                    cluster=cluster,
                    journal_device=f"{cluster}-journal-{k}",
                    ledger_device=f"{cluster}-ledger-{k}",
                    proc_p50_ns=300_000,
                    group_wait_ns=1 * MS,
                    flush_interval_ns=30 * SEC,
                    gc=zgc_like(),
                )
            )
    return ScenarioConfig(
        name="federation-15m",
        duration_ns=60 * SEC,
        seed=707,
        producer=ProducerSpec(rate_per_s=10_000),
        partitions=128,
        ensemble=EnsembleConfig(2, 2, 2),
        dispatch=DispatchSpec(enabled=True, proc_p50_ns=10_600_000),
        key_shared=KeySharedSpec(consumers=4, churn_events=100),
        bundles=BundleSpec(num_bundles=256, split_threshold_per_s=1000.0,
                           check_interval_ns=SEC),
        federation=FederationSpec(mode="hash", ranges=PAPER_FEDERATION),
        block_layers=tuple(layers),
        devices=tuple(devices),
        brokers=tuple(brokers),
        bookies=tuple(bookies),
    )


_BUILDERS = {
    "prod-baseline": _prod_baseline,
    "optimized": _optimized,
    "flush-sweep-15": lambda: _flush_sweep(15),
    "flush-sweep-30": lambda: _flush_sweep(30),
    "flush-sweep-60": lambda: _flush_sweep(60),
    "gc-compare-A": lambda: _gc_compare("A"),
    "gc-compare-B": lambda: _gc_compare("B"),
    "gc-compare-C": lambda: _gc_compare("C"),
    "writeback-demo": _writeback_demo,
    "nic-25g": _nic_25g,
    "federation-15m": _federation_15m,
}

PRESET_NAMES = tuple(_BUILDERS)


def preset(name: str) -> ScenarioConfig:
    builder = _BUILDERS.get(name)
    if builder is None:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}")
    return builder()


def preset_text(name: str) -> str:
    return serialize(preset(name))


def preset_file_text(name: str) -> str:
    """The shipped scenario file for a preset (identical to preset_text)."""
    if name not in _BUILDERS:
        raise KeyError(f"unknown preset {name!r}")
    return resources.files("pulsesim").joinpath(f"presets/{name}.scenario").read_text()


def roundtrip(config: ScenarioConfig) -> ScenarioConfig:
    return parse_scenario(serialize(config))
