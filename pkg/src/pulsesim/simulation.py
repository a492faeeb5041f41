"""Scenario orchestration: builds the cluster from a config, drives the event
engine to completion, and assembles the report (the run operation).

Structure of a run: an open-loop producer emits arrivals in small batched
events; each message's broker-side pipeline (ingress NIC FIFO, processing
draw, replica fan-out) is computed synchronously inside the batch handler with
vectorized pre-draws. Storage-side behavior (group commit, serial fsync,
flush bursts) is event-driven per group. Acknowledgments and dispatch use
exact virtual timestamps deferred through precomputed pause schedules, so a
stop-the-world pause delays everything a frozen process would delay without
needing per-message events.

Dispatch is sequenced per key at end of run in publish order: a message's
delivery time is the running per-key maximum of (ack + dispatch draw), which
is exactly drain-before-handoff ordering across consumer rebalances.
"""

from __future__ import annotations

import gc
import math
from bisect import bisect_right

import numpy as np

from .bookie import Bookie, BookieProcessing, Group
from .broker import NicLink, NicModel
from .engine import (
    NS_PER_SEC,
    Engine,
    Event,
    InternalInvariantError,
    RngState,
)
from .jvm import build_pause_schedule
from .metrics import SimReport
from .routing import (
    BundleMap,
    FederationMap,
    KeySharedState,
    stable_hash16,
)
from .scenario import ScenarioConfig
from .storage import BlockLayer, DeviceModel

BATCH_NS = 5_000_000  # producer arrivals are processed in 5 ms slices
K_BATCH = "producer_batch"
K_BUNDLE_TICK = "bundle_tick"

_exp = math.exp

# message state lives in a plain list for speed; these are its fields
# (M_DONE is appended when the message finalizes)
M_SEQ, M_KIDX, M_TPUB, M_BROKER, M_DEPART, M_NET, M_DDRAW, M_ACKS, M_REPS, M_DONE = range(10)


class _BrokerRt:
    __slots__ = ("broker_id", "idx", "cluster", "nic", "ser_ns", "rtt", "rtt_half",
                 "p50", "sigma", "pause", "arrived", "acked", "delivered")

    def __init__(self, spec, idx, cluster, bits, seconds, pause):
        self.broker_id = spec.broker_id
        self.idx = idx
        self.cluster = cluster
        self.nic = NicLink(NicModel(spec.nic_bandwidth_bps, spec.nic_rtt_ns))
        self.ser_ns = self.nic.model.serialization_ns(bits)
        self.rtt = spec.nic_rtt_ns
        self.rtt_half = spec.nic_rtt_ns // 2
        self.p50 = spec.proc_p50_ns
        self.sigma = spec.proc_sigma
        self.pause = pause
        self.arrived = [0] * seconds
        self.acked = [0] * seconds
        self.delivered = np.zeros(seconds, dtype=np.int64)


class _Cluster:
    __slots__ = ("name", "idx", "brokers", "bookies", "bundles", "ks_times", "ks_epochs")

    def __init__(self, name, idx):
        self.name = name
        self.idx = idx
        self.brokers: list[_BrokerRt] = []
        self.bookies: list[Bookie] = []
        self.bundles: BundleMap | None = None
        self.ks_times: list[int] = []
        # per epoch: (lo array, consumer-global-index array)
        self.ks_epochs: list[tuple[np.ndarray, np.ndarray]] = []


class Simulation:
    def __init__(self, config: ScenarioConfig, trace: bool = False,
                 seed: int | None = None) -> None:
        self.config = config
        self.trace = trace
        self.seed = config.seed if seed is None else seed
        self.duration = config.duration_ns
        self.rng = RngState(self.seed)
        self.engine = Engine()
        self._seconds = max(1, -(-config.duration_ns // NS_PER_SEC))
        self._build()

    # -- construction --------------------------------------------------------

    def _build(self) -> None:
        cfg = self.config
        eng = self.engine
        horizon = self.duration + 30 * NS_PER_SEC

        # pause schedules first: bookies and broker runtimes capture them
        self._pauses: dict[str, list[tuple[int, int]]] = {}
        for spec in (*cfg.brokers, *cfg.bookies):
            ident = getattr(spec, "broker_id", None) or spec.bookie_id
            sched = build_pause_schedule(spec.gc, self.rng.stream(f"gc/{ident}"), horizon)
            eng.set_pause_schedule(ident, sched)
            self._pauses[ident] = sched.windows()

        self.layers: dict[str, BlockLayer] = {}
        for ls in cfg.block_layers:
            self.layers[ls.layer_id] = BlockLayer(
                ls.layer_id, ls.total_ram_bytes, ls.tunables, ls.drain_rate_bytes_per_s,
                ls.degraded_lo_ns, ls.degraded_hi_ns,
            )
        self.devices: dict[str, DeviceModel] = {}
        for ds in cfg.devices:
            self.devices[ds.device_id] = DeviceModel.make(
                ds.device_id, ds.tier, ds.block_layer, ds.fsync_p50_ns, ds.fsync_sigma
            )

        cluster_names = (
            [r.cluster_id for r in cfg.federation.ranges] if cfg.federation else ["default"]
        )
        self.clusters = {name: _Cluster(name, i) for i, name in enumerate(cluster_names)}

        bits = cfg.producer.message_bytes * 8
        self.msg_bits = bits
        self.broker_rts: list[_BrokerRt] = []
        self._broker_by_id: dict[str, _BrokerRt] = {}
        for spec in cfg.brokers:
            cl = self.clusters[spec.cluster]
            rt = _BrokerRt(spec, len(self.broker_rts), cl, bits, self._seconds,
                           eng.pause_schedule(spec.broker_id))
            self.broker_rts.append(rt)
            self._broker_by_id[rt.broker_id] = rt
            cl.brokers.append(rt)

        self.bookies: list[Bookie] = []
        for i, spec in enumerate(cfg.bookies):
            journal = self.devices[spec.journal_device]
            ledger = self.devices[spec.ledger_device]
            bookie = Bookie(
                bookie_id=spec.bookie_id,
                journal_device=journal,
                ledger_device=ledger,
                journal_layer=self.layers[journal.block_layer_id],
                ledger_layer=self.layers[ledger.block_layer_id],
                processing=BookieProcessing(spec.proc_p50_ns, spec.proc_sigma),
                group_wait_ns=spec.group_wait_ns,
                group_max_entries=spec.group_max_entries,
                flush_interval_ns=spec.flush_interval_ns,
                engine=eng,
                sim=self,
                fsync_rng=self.rng.stream(f"fsync/{journal.device_id}"),
                message_bytes=cfg.producer.message_bytes,
                cache_pressure_per_gib_ns=spec.cache_pressure_per_gib_ns,
            )
            bookie.idx = i  # type: ignore[attr-defined]
            bookie.proc_spec = (spec.proc_p50_ns, spec.proc_sigma)  # type: ignore[attr-defined]
            bookie.pending_adds = []  # type: ignore[attr-defined]
            self.bookies.append(bookie)
            self.clusters[spec.cluster].bookies.append(bookie)

        if cfg.federation:
            self.fmap = FederationMap(cfg.partitions, list(cfg.federation.ranges),
                                      cfg.federation.mode)
        else:
            self.fmap = FederationMap.single_cluster(cfg.partitions)

        if cfg.bundles:
            for cl in self.clusters.values():
                cl.bundles = BundleMap(
                    [b.broker_id for b in cl.brokers],
                    cfg.bundles.num_bundles,
                    cfg.bundles.split_threshold_per_s,
                )
                eng.register(f"bundles/{cl.name}", self._on_bundle_tick)

        self._build_key_table()
        self._build_key_shared()

        # vectorizable draw models (uniform parameters across instances)
        broker_params = {(b.p50, b.sigma) for b in self.broker_rts}
        self._b_homog = broker_params.pop() if len(broker_params) == 1 else None
        bookie_params = {b.proc_spec for b in self.bookies}
        self._k_homog = bookie_params.pop() if len(bookie_params) == 1 else None

        # tagged component streams and result state
        self.report = SimReport(duration_ns=self.duration, seed=self.seed)
        self._jhist = self.report.components["journal_fsync"]
        self._whist = self.report.components["group_wait"]
        self._bhist = self.report.components["bk_processing"]
        self._nhist = self.report.components["broker_network"]
        self._publish_hist = self.report.publish
        self._pub_buf: list[int] = []
        self._net_buf: list[int] = []
        self.counters = self.report.counters
        self._unfinalized = 0
        self._late = 0
        self._next_idx = 0
        self.qw = cfg.ensemble.qw
        self.qa = cfg.ensemble.qa

        # finalized messages kept as rows (their msg lists, gaining a done
        # field) for dispatch sequencing and the trace
        self._keep_rows = cfg.dispatch.enabled or self.trace
        self._rows: list[list] = []
        self._fsync_rows: list[tuple[int, str, str, int, int]] | None = (
            [] if self.trace else None
        )
        self._deliver_arr = None
        self._consumer_arr = None

        eng.register("producer", self._on_batch)

    def _build_key_table(self) -> None:
        cfg = self.config
        literal = self.fmap.mode == "literal"
        names = list(self.clusters)
        keys = cfg.producer.keys
        self.key_str: list[str] = []
        self.key_h16 = np.zeros(keys, dtype=np.int64)
        self.key_cluster = np.zeros(keys, dtype=np.int64)
        self.key_broker: list[_BrokerRt] = [None] * keys  # type: ignore[list-item]
        self.key_ens: list[tuple[Bookie, ...]] = [None] * keys  # type: ignore[list-item]
        e = cfg.ensemble.e
        for kidx in range(keys):
            key = (
                f"{names[kidx % len(names)]}-acct-{kidx}" if literal else f"key-{kidx}"
            )
            self.key_str.append(key)
            cluster_id, partition = self.fmap.route(key)
            cl = self.clusters[cluster_id]
            self.key_h16[kidx] = stable_hash16(key)
            self.key_cluster[kidx] = cl.idx
            r = self.fmap.range_for_partition(partition)
            self.key_broker[kidx] = cl.brokers[(partition - r.lo) % len(cl.brokers)]
            pool = cl.bookies
            self.key_ens[kidx] = tuple(pool[(partition + i) % len(pool)] for i in range(e))
        self._clusters_by_idx = list(self.clusters.values())

    def _build_key_shared(self) -> None:
        cfg = self.config
        self._ks_names: list[str] = []
        if not cfg.dispatch.enabled:
            return
        states: dict[str, KeySharedState] = {}
        for cl in self.clusters.values():
            state = KeySharedState()
            for i in range(cfg.key_shared.consumers):
                state = state.join(f"{cl.name}-c{i}")
            states[cl.name] = state
            cl.ks_times = [0]
            cl.ks_epochs = [self._epoch_arrays(state)]
        counter = cfg.key_shared.consumers
        if cfg.key_shared.churn_events:
            rng = self.rng.stream("churn")
            times = sorted(rng.randrange(1, max(2, self.duration)) for _ in
                           range(cfg.key_shared.churn_events))
            names = list(self.clusters)
            for t in times:
                cname = names[rng.randrange(len(names))]
                cl = self.clusters[cname]
                state = states[cname]
                members = sorted(state.consumers())
                if rng.random() < 0.5 and len(members) > 1:
                    state = state.leave(members[rng.randrange(len(members))])
                else:
                    state = state.join(f"{cname}-c{counter}")
                    counter += 1
                states[cname] = state
                cl.ks_times.append(t)
                cl.ks_epochs.append(self._epoch_arrays(state))

    def _epoch_arrays(self, state: KeySharedState) -> tuple[np.ndarray, np.ndarray]:
        los = np.array([a.lo for a in state.assignments], dtype=np.int64)
        cons = np.empty(len(state.assignments), dtype=np.int64)
        for i, a in enumerate(state.assignments):
            try:
                cons[i] = self._ks_names.index(a.consumer_id)
            except ValueError:
                self._ks_names.append(a.consumer_id)
                cons[i] = len(self._ks_names) - 1
        return los, cons

    # -- hooks used by bookies -------------------------------------------------

    def trace_fsync(self, device_id: str, layer_id: str, start: int, end: int,
                    contended: bool) -> None:
        if self._fsync_rows is not None:
            self._fsync_rows.append((start, device_id, layer_id, end, 1 if contended else 0))

    def on_group_synced(self, bookie: Bookie, group: Group, fs_start: int, fs_done: int,
                        fsync_ns: int, ack_send: int) -> None:
        qw = self.qw
        qa = self.qa
        entries = group.entries
        n = len(entries)
        self._jhist.record_block([fsync_ns] * n)
        self._whist.record_block([group.window_ns] * n)
        self._bhist.record_block([e[4] for e in entries])
        brokers = self.broker_rts
        tracing = self.trace
        bid = bookie.bookie_id
        duration = self.duration
        keep_rows = self._keep_rows
        pub_append = self._pub_buf.append
        net_append = self._net_buf.append
        row_append = self._rows.append
        acked_n = 0
        late_n = 0
        for ent in entries:
            msg = ent[2]
            bro = brokers[msg[M_BROKER]]
            t = ack_send + bro.rtt_half
            starts = bro.pause.starts
            if starts:
                i = bisect_right(starts, t) - 1
                if i >= 0:
                    end = bro.pause.ends[i]
                    if t < end:
                        t = end
            acks = msg[M_ACKS]
            acks.append(t)
            if tracing:
                msg[M_REPS].append((bid, ent[3], fs_start, fs_done, t))
            if len(acks) == qw:
                done = max(acks) if qa == qw else sorted(acks)[qa - 1]
                if done < duration:
                    acked_n += 1
                    pub_append(done - msg[M_TPUB])
                    net_append(msg[M_NET])
                    bro2 = brokers[msg[M_BROKER]]
                    bro2.acked[done // NS_PER_SEC] += 1
                else:
                    late_n += 1
                if keep_rows:
                    msg.append(done)
                    row_append(msg)
        if acked_n or late_n:
            self.counters.acked += acked_n
            self._late += late_n
            self._unfinalized -= acked_n + late_n

    # -- producer ---------------------------------------------------------------

    def _on_batch(self, ev: Event) -> None:
        eng = self.engine
        t0 = ev.fire_at
        t1 = t0 + BATCH_NS
        duration = self.duration
        if t1 < duration:
            eng.schedule(t1, K_BATCH, "producer")
        cfg = self.config
        rate = cfg.producer.rate_per_s
        horizon = min(t1, duration)
        i1 = (horizon * rate - 1) // NS_PER_SEC + 1 if horizon * rate > 0 else 0
        i0 = self._next_idx
        n = i1 - i0
        if n <= 0:
            return
        self._next_idx = i1

        ts = ((np.arange(i0, i1, dtype=np.int64) * NS_PER_SEC) // rate).tolist()
        jitter = cfg.producer.jitter_ns
        jt = (
            self.rng.array_stream("jitter").integers(0, jitter + 1, n).tolist()
            if jitter else None
        )
        kdist = cfg.producer.key_dist
        kgen = self.rng.array_stream("keys")
        if kdist == "uniform":
            kidxs = kgen.integers(0, cfg.producer.keys, n).tolist()
        else:
            kidxs = self._zipf_draw(kgen, n)
        zb = self.rng.array_stream("broker_proc").standard_normal(n)
        bdraws = None
        if self._b_homog is not None:
            p50, sig = self._b_homog
            bdraws = (
                np.rint(p50 * np.exp(sig * zb)).astype(np.int64).tolist()
                if sig != 0.0 else [p50] * n
            )
        else:
            zb = zb.tolist()
        qw = self.qw
        zk = self.rng.array_stream("bookie_proc").standard_normal(n * qw)
        kdraws = None
        if self._k_homog is not None:
            kp50, ksig = self._k_homog
            kdraws = (
                np.rint(kp50 * np.exp(ksig * zk)).astype(np.int64).tolist()
                if ksig != 0.0 else [kp50] * (n * qw)
            )
        else:
            zk = zk.tolist()
        if cfg.dispatch.enabled:
            dspec = cfg.dispatch
            zd = self.rng.array_stream("dispatch").standard_normal(n)
            ddraws = (
                np.rint(dspec.proc_p50_ns * np.exp(dspec.proc_sigma * zd))
                .astype(np.int64).tolist()
                if dspec.proc_sigma != 0.0 else [dspec.proc_p50_ns] * n
            )
        else:
            ddraws = None

        key_broker = self.key_broker
        key_ens = self.key_ens
        bundle_mode = cfg.bundles is not None
        trace = self.trace
        seconds = self._seconds - 1
        counters = self.counters
        exp = _exp
        kz = 0
        e = cfg.ensemble.e
        published = 0
        for j in range(n):
            t_pub = ts[j]
            if jt is not None:
                t_pub += jt[j]
            kidx = kidxs[j]
            if bundle_mode:
                cl = self._clusters_by_idx[int(self.key_cluster[kidx])]
                h16 = int(self.key_h16[kidx])
                cl.bundles.record(h16)
                bro = self._broker_by_id[cl.bundles.bundle_for(h16).broker_id]
            else:
                bro = key_broker[kidx]
            pause = bro.pause
            t_start = pause.defer(t_pub) if pause.starts else t_pub
            # ingress NIC first (arrivals are time-ordered per broker, so the
            # link is a true FIFO), then the processing draw, then fan-out
            nic = bro.nic
            busy = nic.busy_until
            s = t_start if t_start > busy else busy
            depart = s + bro.ser_ns
            nic.busy_until = depart
            if bdraws is not None:
                draw = bdraws[j]
            else:
                sig = bro.sigma
                draw = int(bro.p50 * exp(sig * zb[j])) if sig != 0.0 else bro.p50
            seq = i0 + j
            msg = [
                seq, kidx, t_pub, bro.idx, depart,
                depart - t_start + draw + bro.rtt,
                ddraws[j] if ddraws is not None else 0,
                [], [] if trace else None,
            ]
            published += 1
            sec = t_pub // NS_PER_SEC
            bro.arrived[sec if sec < seconds else seconds] += 1
            ens = key_ens[kidx]
            arrive = depart + draw + bro.rtt_half
            for k in range(qw):
                bookie = ens[(seq + k) % e]
                if kdraws is not None:
                    pd = kdraws[kz]
                else:
                    p50, bsig = bookie.proc_spec
                    pd = int(p50 * exp(bsig * zk[kz])) if bsig != 0.0 else p50
                kz += 1
                bookie.pending_adds.append((msg, arrive, pd))
        counters.published += published
        self._unfinalized += published
        for bookie in self.bookies:
            if bookie.pending_adds:
                bookie.add_batch(bookie.pending_adds)
                bookie.pending_adds = []

    def _zipf_draw(self, gen: np.random.Generator, n: int):
        cdf = getattr(self, "_zipf_cdf", None)
        if cdf is None:
            alpha = float(self.config.producer.key_dist[5:])
            w = 1.0 / np.power(np.arange(1, self.config.producer.keys + 1, dtype=np.float64), alpha)
            cdf = np.cumsum(w)
            cdf /= cdf[-1]
            self._zipf_cdf = cdf
        return np.searchsorted(cdf, gen.random(n), side="right").tolist()

    def _on_bundle_tick(self, ev: Event) -> None:
        cluster = ev.target.split("/", 1)[1]
        cl = self.clusters[cluster]
        interval = self.config.bundles.check_interval_ns
        cl.bundles.tick(ev.fire_at, interval / NS_PER_SEC)
        self.engine.schedule(ev.fire_at + interval, K_BUNDLE_TICK, ev.target)

    # -- run ---------------------------------------------------------------------

    def run(self) -> SimReport:
        cfg = self.config
        eng = self.engine
        if cfg.producer.rate_per_s > 0:
            eng.schedule(0, K_BATCH, "producer")
        for bookie in self.bookies:
            bookie.start()
        if cfg.bundles:
            for cl in self.clusters.values():
                eng.schedule(cfg.bundles.check_interval_ns, K_BUNDLE_TICK, f"bundles/{cl.name}")
        # the run allocates millions of acyclic containers; keep the cyclic
        # collector out of the hot loop
        was_enabled = gc.isenabled()
        gc.disable()
        try:
            eng.run_until(self.duration)
            self._finish_dispatch()
        finally:
            if was_enabled:
                gc.enable()
        self._assemble_report()
        return self.report

    def _finish_dispatch(self) -> None:
        rows = self._rows
        if not self.config.dispatch.enabled or not rows:
            return
        n = len(rows)
        seq = np.fromiter((m[M_SEQ] for m in rows), np.int64, n)
        kidx = np.fromiter((m[M_KIDX] for m in rows), np.int64, n)
        done = np.fromiter((m[M_DONE] for m in rows), np.int64, n)
        broker = np.fromiter((m[M_BROKER] for m in rows), np.int64, n)
        ddraw = np.fromiter((m[M_DDRAW] for m in rows), np.int64, n)
        tpub = np.fromiter((m[M_TPUB] for m in rows), np.int64, n)
        acked = done < self.duration
        if not acked.any():
            return
        seq_a, kidx_a, done_a = seq[acked], kidx[acked], done[acked]
        broker_a, ddraw_a = broker[acked], ddraw[acked]
        # per-key FIFO in publish order: running max of candidate deliveries
        order = np.lexsort((seq_a, kidx_a))
        cand = done_a[order] + ddraw_a[order]
        ks = kidx_a[order]
        boundaries = np.flatnonzero(np.diff(ks)) + 1
        deliver_sorted = cand.copy()
        start = 0
        for end in (*boundaries.tolist(), len(cand)):
            np.maximum.accumulate(deliver_sorted[start:end], out=deliver_sorted[start:end])
            start = end
        deliver = np.empty_like(deliver_sorted)
        deliver[order] = deliver_sorted  # back to acked-row order
        # consumer assignment at the instant the broker hands off (ack time)
        cons = np.full(len(seq_a), -1, dtype=np.int64)
        kc = self.key_cluster[kidx_a]
        h16 = self.key_h16[kidx_a]
        for cl in self._clusters_by_idx:
            m = np.flatnonzero(kc == cl.idx)
            if not len(m):
                continue
            times = np.asarray(cl.ks_times, dtype=np.int64)
            ei = np.searchsorted(times, done_a[m], side="right") - 1
            for epoch in np.unique(ei):
                mm = m[ei == epoch]
                los, cmap = cl.ks_epochs[int(epoch)]
                ai = np.searchsorted(los, h16[mm], side="right") - 1
                cons[mm] = cmap[ai]
        delivered = deliver < self.duration
        e2e = (deliver - tpub[acked])[delivered]
        if len(e2e):
            self.report.e2e.record_many(e2e)
        self.counters.delivered = int(delivered.sum())
        dsec = np.minimum(deliver[delivered] // NS_PER_SEC, self._seconds - 1)
        dbroker = broker_a[delivered]
        for rt in self.broker_rts:
            mask = dbroker == rt.idx
            if mask.any():
                rt.delivered += np.bincount(dsec[mask], minlength=self._seconds)
        # row-aligned deliver/consumer columns (-1 where not dispatched)
        self._deliver_arr = np.full(n, -1, dtype=np.int64)
        self._deliver_arr[np.flatnonzero(acked)] = deliver
        self._consumer_arr = np.full(n, -1, dtype=np.int64)
        self._consumer_arr[np.flatnonzero(acked)] = cons

    def _assemble_report(self) -> None:
        report = self.report
        self._publish_hist.record_block(self._pub_buf)
        self._nhist.record_block(self._net_buf)
        self._pub_buf = []
        self._net_buf = []
        for rt in self.broker_rts:
            report.broker_rates[rt.broker_id] = {
                "arrived": np.asarray(rt.arrived, dtype=np.int64),
                "acked": np.asarray(rt.acked, dtype=np.int64),
                "delivered": rt.delivered,
            }
        for layer in self.layers.values():
            for start, end, burst in layer.window_log:
                report.contention_windows.append((layer.layer_id, start, end, burst))
        report.contention_windows.sort(key=lambda w: (w[1], w[0]))
        for ident, windows in self._pauses.items():
            for start, end in windows:
                if start < self.duration:
                    report.gc_pauses.append((ident, start, end))
        report.gc_pauses.sort(key=lambda w: (w[1], w[0]))
        c = self.counters
        independent_in_flight = self._unfinalized + self._late
        if c.published != c.acked + c.failed + independent_in_flight:
            raise InternalInvariantError(
                f"conservation violated: published={c.published} acked={c.acked} "
                f"failed={c.failed} in_flight={independent_in_flight}"
            )

    # -- trace -------------------------------------------------------------------

    def trace_lines(self) -> list[str]:
        """The full events.log content (tab-separated, time-ordered)."""
        if not self.trace:
            raise ValueError("run was not traced")
        cfg = self.config
        meta = [
            f"0\tMETA\tscenario\t{cfg.name}",
            f"0\tMETA\tseed\t{self.seed}",
            f"0\tMETA\tduration\t{self.duration}",
            f"0\tMETA\te\t{cfg.ensemble.e}",
            f"0\tMETA\tqw\t{cfg.ensemble.qw}",
            f"0\tMETA\tqa\t{cfg.ensemble.qa}",
            f"0\tMETA\tmessage_bits\t{self.msg_bits}",
        ]
        for rt in self.broker_rts:
            meta.append(f"0\tMETA\tnic\t{rt.broker_id}\t{rt.nic.model.bandwidth_bps}")
        for layer in self.layers.values():
            meta.append(
                f"0\tMETA\tlayer_band\t{layer.layer_id}\t"
                f"{layer.degraded_lo_ns}\t{layer.degraded_hi_ns}"
            )
        rows: list[tuple[int, int, str]] = []
        order = 0
        for ident, windows in self._pauses.items():
            for start, end in windows:
                if start < self.duration:
                    rows.append((start, order, f"{start}\tPAUSE\t{ident}\t{end}"))
                    order += 1
        for layer_id, start, end, burst in self.report.contention_windows:
            rows.append((start, order, f"{start}\tWINDOW\t{layer_id}\t{end}\t{burst}"))
            order += 1
        for start, device_id, layer_id, end, contended in self._fsync_rows:
            rows.append(
                (start, order, f"{start}\tFSYNC\t{device_id}\t{layer_id}\t{end}\t{contended}")
            )
            order += 1
        key_str = self.key_str
        names = self._ks_names
        duration = self.duration
        broker_ids = [rt.broker_id for rt in self.broker_rts]
        deliver_arr = self._deliver_arr
        cons_arr = self._consumer_arr
        for i, msg in enumerate(self._rows):
            rep_txt = ";".join(
                f"{b}:{ta}:{fs}:{fe}:{ak}" for b, ta, fs, fe, ak in msg[M_REPS]
            )
            d = msg[M_DONE]
            done_txt = str(d) if d < duration else "-"
            deliver = int(deliver_arr[i]) if deliver_arr is not None else -1
            deliver_txt = str(deliver) if deliver >= 0 else "-"
            ci = int(cons_arr[i]) if cons_arr is not None else -1
            cons_txt = names[ci] if ci >= 0 else "-"
            tpub = msg[M_TPUB]
            rows.append(
                (
                    tpub,
                    order + i,
                    f"{tpub}\tMSG\t{msg[M_SEQ]}\t{key_str[msg[M_KIDX]]}\t"
                    f"{broker_ids[msg[M_BROKER]]}\t{msg[M_DEPART]}\t{self.msg_bits}\t"
                    f"{rep_txt}\t{done_txt}\t{deliver_txt}\t{cons_txt}",
                )
            )
        rows.sort(key=lambda r: (r[0], r[1]))
        return meta + [r[2] for r in rows]


def run_scenario(config: ScenarioConfig, trace: bool = False,
                 seed: int | None = None) -> tuple[SimReport, Simulation]:
    """Build and run one scenario; returns the report and the finished
    simulation (for trace extraction)."""
    sim = Simulation(config, trace=trace, seed=seed)
    report = sim.run()
    return report, sim
