"""Trace auditor: replays an events.log and independently re-checks the
structural invariants from the records alone.

This is a second implementation path: it parses the text log and re-derives
each invariant without using any engine or model code, so a bookkeeping bug in
the simulator cannot hide itself. One record per line, tab-separated, fields
by kind:

  t  META    name value...                        (run constants, time 0)
  t  PAUSE   process end                          (t = pause start)
  t  WINDOW  layer end burst_bytes                (t = window start)
  t  FSYNC   device layer end contended           (t = fsync start)
  t  MSG     seq key broker depart bits replicas done deliver consumer
             replicas = bookie:add:fstart:fend:ack;...  ("-" when unknown)

Checked invariants:
  time_order              non-decreasing record times
  ack_after_fsync         each replica ack follows a covering fsync that
                          started at or after the entry arrived
  quorum_order_statistic  publish completion equals the qa-th smallest
                          replica ack, exactly
  serial_journal          fsyncs on one device never overlap
  link_capacity           per broker, bits departing in any 1 s window never
                          exceed the NIC bandwidth
  per_key_ordering        per key, delivery order follows publish order
  contended_fsync_band    fsyncs starting inside a contention window on the
                          same layer last between the layer's degraded bounds
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from pathlib import Path

import numpy as np

NS_PER_SEC = 1_000_000_000
DEFAULT_BAND = (15_000_000, 22_000_000)

INVARIANTS = (
    "time_order",
    "ack_after_fsync",
    "quorum_order_statistic",
    "serial_journal",
    "link_capacity",
    "per_key_ordering",
    "contended_fsync_band",
)


class TraceParseError(Exception):
    def __init__(self, line_no: int, message: str) -> None:
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


@dataclass
class Verdict:
    invariant: str
    passed: bool
    detail: str = ""

    def __str__(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.invariant}" + (f": {self.detail}" if self.detail else "")


def _int(raw: str, line_no: int, what: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise TraceParseError(line_no, f"bad {what} {raw!r}") from None


def audit_lines(lines) -> list[Verdict]:
    qa: int | None = None
    qw: int | None = None
    nic_bw: dict[str, int] = {}
    bands: dict[str, tuple[int, int]] = {}
    windows: dict[str, list[tuple[int, int]]] = {}      # layer -> (start, end)
    fsyncs: list[tuple[str, str, int, int, int]] = []   # (device, layer, start, end, line)
    departs: dict[str, list[tuple[int, int]]] = {}      # broker -> (depart, bits)
    per_key: dict[str, list[tuple[int, int]]] = {}      # key -> (seq, deliver)

    time_order = Verdict("time_order", True)
    ack_fsync = Verdict("ack_after_fsync", True)
    quorum = Verdict("quorum_order_statistic", True)

    last_t = -1
    for line_no, raw in enumerate(lines, start=1):
        raw = raw.rstrip("\n")
        if not raw:
            continue
        fields = raw.split("\t")
        if len(fields) < 2:
            raise TraceParseError(line_no, "expected tab-separated record")
        t = _int(fields[0], line_no, "time")
        kind = fields[1]
        if time_order.passed and t < last_t:
            time_order = Verdict(
                "time_order", False, f"line {line_no}: time {t} after {last_t}"
            )
        last_t = max(last_t, t)
        if kind == "META":
            if len(fields) < 4:
                raise TraceParseError(line_no, "META needs a name and value")
            name = fields[2]
            if name == "qa":
                qa = _int(fields[3], line_no, "qa")
            elif name == "qw":
                qw = _int(fields[3], line_no, "qw")
            elif name == "nic":
                if len(fields) < 5:
                    raise TraceParseError(line_no, "META nic needs broker and bandwidth")
                nic_bw[fields[3]] = _int(fields[4], line_no, "bandwidth")
            elif name == "layer_band":
                if len(fields) < 6:
                    raise TraceParseError(line_no, "META layer_band needs layer lo hi")
                bands[fields[3]] = (
                    _int(fields[4], line_no, "band lo"),
                    _int(fields[5], line_no, "band hi"),
                )
        elif kind == "PAUSE":
            if len(fields) != 4:
                raise TraceParseError(line_no, "PAUSE needs process and end")
            _int(fields[3], line_no, "pause end")
        elif kind == "WINDOW":
            if len(fields) != 5:
                raise TraceParseError(line_no, "WINDOW needs layer, end, burst")
            windows.setdefault(fields[2], []).append(
                (t, _int(fields[3], line_no, "window end"))
            )
        elif kind == "FSYNC":
            if len(fields) != 6:
                raise TraceParseError(line_no, "FSYNC needs device, layer, end, contended")
            fsyncs.append((fields[2], fields[3], t, _int(fields[4], line_no, "fsync end"),
                           line_no))
        elif kind == "MSG":
            if len(fields) != 11:
                raise TraceParseError(line_no, f"MSG needs 11 fields, got {len(fields)}")
            seq = _int(fields[2], line_no, "seq")
            key = fields[3]
            broker = fields[4]
            depart = _int(fields[5], line_no, "depart")
            bits = _int(fields[6], line_no, "bits")
            departs.setdefault(broker, []).append((depart, bits))
            acks: list[int] = []
            if fields[7]:
                for rep in fields[7].split(";"):
                    parts = rep.split(":")
                    if len(parts) != 5:
                        raise TraceParseError(line_no, f"bad replica {rep!r}")
                    add = _int(parts[1], line_no, "replica add")
                    fstart = _int(parts[2], line_no, "replica fsync start")
                    fend = _int(parts[3], line_no, "replica fsync end")
                    ack = _int(parts[4], line_no, "replica ack")
                    if ack_fsync.passed and not (add <= fstart <= fend <= ack):
                        ack_fsync = Verdict(
                            "ack_after_fsync",
                            False,
                            f"line {line_no}: replica {parts[0]} add={add} "
                            f"fsync=[{fstart},{fend}] ack={ack}",
                        )
                    acks.append(ack)
            done_txt = fields[8]
            if done_txt != "-" and qa is not None and qw is not None and len(acks) == qw:
                done = _int(done_txt, line_no, "done")
                expected = sorted(acks)[qa - 1]
                if quorum.passed and done != expected:
                    quorum = Verdict(
                        "quorum_order_statistic",
                        False,
                        f"line {line_no}: done={done}, qa-th ack={expected}",
                    )
            if fields[9] != "-":
                deliver = _int(fields[9], line_no, "deliver")
                per_key.setdefault(key, []).append((seq, deliver))
        else:
            raise TraceParseError(line_no, f"unknown record kind {kind!r}")

    verdicts = [time_order, ack_fsync, quorum]

    serial = Verdict("serial_journal", True)
    by_device: dict[str, list[tuple[int, int]]] = {}
    for device, _layer, start, end, _line in fsyncs:
        by_device.setdefault(device, []).append((start, end))
    for device, spans in sorted(by_device.items()):
        spans.sort()
        for (_s1, e1), (s2, _e2) in zip(spans, spans[1:]):
            if s2 < e1:
                serial = Verdict(
                    "serial_journal",
                    False,
                    f"device {device}: fsync at {s2} overlaps one ending {e1}",
                )
                break
        if not serial.passed:
            break
    verdicts.append(serial)

    capacity = Verdict("link_capacity", True)
    for broker in sorted(departs):
        bw = nic_bw.get(broker)
        if bw is None:
            continue
        events = sorted(departs[broker])
        ts = np.array([t for t, _ in events], dtype=np.int64)
        bits = np.array([b for _, b in events], dtype=np.int64)
        prefix = np.concatenate(([0], np.cumsum(bits)))
        starts = np.searchsorted(ts, ts - NS_PER_SEC, side="right")
        in_window = prefix[1:] - prefix[starts]
        bad = np.flatnonzero(in_window > bw)
        if len(bad):
            i = int(bad[0])
            capacity = Verdict(
                "link_capacity",
                False,
                f"broker {broker}: {int(in_window[i])} bits in the second ending "
                f"{int(ts[i])} exceeds {bw}",
            )
            break
    verdicts.append(capacity)

    ordering = Verdict("per_key_ordering", True)
    for key in per_key:
        pairs = sorted(per_key[key])  # publish order by seq
        last = -1
        for seq, deliver in pairs:
            if deliver < last:
                ordering = Verdict(
                    "per_key_ordering",
                    False,
                    f"key {key}: message {seq} delivered at {deliver}, "
                    f"before an earlier message's {last}",
                )
                break
            last = deliver
        if not ordering.passed:
            break
    verdicts.append(ordering)

    band_check = Verdict("contended_fsync_band", True)
    window_starts: dict[str, list[int]] = {}
    window_ends: dict[str, list[int]] = {}
    for layer, spans in windows.items():
        spans.sort()
        window_starts[layer] = [s for s, _ in spans]
        window_ends[layer] = [e for _, e in spans]
    for device, layer, start, end, line_no in fsyncs:
        starts = window_starts.get(layer)
        if not starts:
            continue
        i = bisect.bisect_right(starts, start) - 1
        if i < 0 or start >= window_ends[layer][i]:
            continue
        lo, hi = bands.get(layer, DEFAULT_BAND)
        dur = end - start
        if not lo <= dur <= hi:
            band_check = Verdict(
                "contended_fsync_band",
                False,
                f"line {line_no}: fsync on {device} inside a window lasted {dur} ns, "
                f"outside [{lo}, {hi}]",
            )
            break
    verdicts.append(band_check)
    return verdicts


def audit_file(path: str | Path) -> list[Verdict]:
    with Path(path).open() as fh:
        return audit_lines(fh)
