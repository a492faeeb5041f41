"""Report emission: the human-readable summary and the fixed-column CSVs.

Files written per run (columns are stable, documented here and in the README):

  summary.txt          human-readable run summary
  publish_hist.csv     bucket_lo_ns,bucket_hi_ns,count
  e2e_hist.csv         bucket_lo_ns,bucket_hi_ns,count
  broker_rates.csv     second,broker,arrived,acked,delivered   (1 s buckets)
  decomposition.csv    component,median_ms
  events.log           only with tracing: tab-separated audit records

Output is a pure function of the report, so two runs with the same seed emit
byte-identical files.
"""

from __future__ import annotations

import csv
from pathlib import Path

from .engine import NS_PER_MS
from .metrics import EmptyHistogramError, LatencyHistogram, SimReport, decompose

QUANTILES = (("P50", 0.5), ("P95", 0.95), ("P99", 0.99), ("P99.9", 0.999))


def _ms(ns: float) -> str:
    return f"{ns / NS_PER_MS:.6f}"


def _hist_csv(path: Path, hist: LatencyHistogram) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["bucket_lo_ns", "bucket_hi_ns", "count"])
        for lo, hi, count in hist.nonzero_buckets():
            w.writerow([lo, hi, count])


def _quantile_line(label: str, hist: LatencyHistogram) -> str:
    if hist.count == 0:
        return f"{label:<10} (no samples)"
    cells = "  ".join(f"{name}={hist.quantile(q) / NS_PER_MS:.3f}ms" for name, q in QUANTILES)
    return f"{label:<10} {cells}  max={hist.max / NS_PER_MS:.3f}ms  n={hist.count}"


def summary_text(report: SimReport, name: str = "run") -> str:
    c = report.counters
    lines = [
        f"pulse-sim report: {name}",
        f"seed={report.seed}  duration={report.duration_ns / 1e9:.3f}s",
        "",
        f"messages: published={c.published} acked={c.acked} failed={c.failed} "
        f"in_flight={c.in_flight} delivered={c.delivered}",
        f"throughput: publish={report.publish_throughput():.1f} msg/s  "
        f"end_to_end={report.e2e_throughput():.1f} msg/s",
        "",
        _quantile_line("publish", report.publish),
        _quantile_line("end_to_end", report.e2e),
        "",
        "component medians (publish path):",
    ]
    breakdown = decompose(report)
    for comp, value in breakdown.rows():
        lines.append(f"  {comp:<16} {_ms(value)} ms")
    windows = report.contention_windows
    total_win = report.total_contention_ns()
    lines.append("")
    lines.append(
        f"writeback contention: {len(windows)} windows, total {total_win / 1e9:.3f}s"
    )
    for layer_id, start, end, burst in windows[:20]:
        lines.append(
            f"  layer={layer_id} start={start / 1e9:.3f}s len={(end - start) / 1e9:.3f}s "
            f"burst={burst} bytes"
        )
    if len(windows) > 20:
        lines.append(f"  ... {len(windows) - 20} more")
    pauses = report.gc_pauses
    longest = max((end - start for _, start, end in pauses), default=0)
    lines.append(
        f"gc pauses: {len(pauses)} injected, longest {longest / NS_PER_MS:.3f}ms"
    )
    lines.append("")
    lines.append(
        "conservation: published == acked + failed + in_flight -> "
        f"{c.published} == {c.acked} + {c.failed} + {c.in_flight}"
    )
    return "\n".join(lines) + "\n"


def emit_report(
    report: SimReport,
    out_dir: str | Path,
    name: str = "run",
    trace_lines: list[str] | None = None,
) -> list[Path]:
    """Write the report files; returns the paths written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    path = out / "summary.txt"
    path.write_text(summary_text(report, name))
    written.append(path)

    _hist_csv(out / "publish_hist.csv", report.publish)
    written.append(out / "publish_hist.csv")
    _hist_csv(out / "e2e_hist.csv", report.e2e)
    written.append(out / "e2e_hist.csv")

    path = out / "broker_rates.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["second", "broker", "arrived", "acked", "delivered"])
        for broker in sorted(report.broker_rates):
            rates = report.broker_rates[broker]
            for sec in range(len(rates["arrived"])):
                w.writerow(
                    [
                        sec,
                        broker,
                        int(rates["arrived"][sec]),
                        int(rates["acked"][sec]),
                        int(rates["delivered"][sec]),
                    ]
                )
    written.append(path)

    path = out / "decomposition.csv"
    breakdown = decompose(report)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["component", "median_ms"])
        for comp, value in breakdown.rows():
            w.writerow([comp, _ms(value)])
    written.append(path)

    if trace_lines is not None:
        path = out / "events.log"
        with path.open("w") as fh:
            fh.write("\n".join(trace_lines))
            fh.write("\n")
        written.append(path)
    return written
