"""Deviation files (TSV) and per-trace fitness tables (CSV)."""

from __future__ import annotations

import csv
import io
from collections import Counter
from pathlib import Path
from typing import Sequence

from .replay import DeviationKind, ReplayCounters, ReplayResult, fitness, log_fitness

TSV_HEADER = ("trace", "event", "timestamp", "activity", "object", "kind", "description")
_CODES = [k.code for k in DeviationKind]


def _clean(value) -> str:
    return "" if value is None else str(value).replace("\t", " ").replace("\n", " ")


def _counts_line(label: str, counts: Counter, c: ReplayCounters) -> str:
    per_kind = " ".join(f"{code}={counts.get(code, 0)}" for code in _CODES)
    return f"# {label} {per_kind} j={c.j} k={c.k} fitness={fitness(c):.4f}"


def deviations_tsv(results: Sequence[ReplayResult]) -> str:
    """Render one line per deviation, then a ``#``-prefixed summary footer.

    Non-proper terminations have no event; their timestamp column shows the
    trace's last event time prefixed with ``end:``.
    """
    buf = io.StringIO()
    buf.write("\t".join(TSV_HEADER) + "\n")
    for r in results:
        for d in r.deviations:
            if d.kind is DeviationKind.NONPROPER_TERMINATION:
                ts = f"end:{r.last_timestamp}" if r.last_timestamp else "end"
            else:
                ts = d.timestamp
            row = (d.trace_id, d.event_seq, ts, d.activity, d.object_id, d.kind.code, d.description)
            buf.write("\t".join(_clean(v) for v in row) + "\n")
    total = Counter()
    tj = tk = 0
    for r in results:
        counts = Counter(d.kind.code for d in r.deviations)
        total.update(counts)
        tj += r.counters.j
        tk += r.counters.k
        buf.write(_counts_line(f"trace={r.trace_id}", counts, r.counters) + "\n")
    buf.write(_counts_line("total", total, ReplayCounters(tj, tk)) + "\n")
    return buf.getvalue()


def read_deviations_tsv(path) -> list[dict]:
    """Parse the deviation rows back (footer lines are skipped)."""
    rows = []
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(lines, delimiter="\t", quoting=csv.QUOTE_NONE)
    for row in reader:
        rows.append(row)
    return rows


def write_deviations(results: Sequence[ReplayResult], path) -> None:
    Path(path).write_text(deviations_tsv(results))


def fitness_csv(results: Sequence[ReplayResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["trace", "events", "objects", "deviations", "j", "k", "fitness"])
    for r in results:
        w.writerow([r.trace_id, r.events, r.objects, len(r.deviations), r.counters.j, r.counters.k, f"{r.fitness:.6f}"])
    w.writerow(
        [
            "ALL",
            sum(r.events for r in results),
            sum(r.objects for r in results),
            sum(len(r.deviations) for r in results),
            sum(r.counters.j for r in results),
            sum(r.counters.k for r in results),
            f"{log_fitness(results):.6f}",
        ]
    )
    return buf.getvalue()


def write_fitness(results: Sequence[ReplayResult], path) -> None:
    Path(path).write_text(fitness_csv(results))
