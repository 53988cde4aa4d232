"""Log-level diagnostics and the annotated (enhanced) model graph."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .net import CPN
from .replay import TERMINATION, ReplayResult, log_fitness


@dataclass
class TransitionMeasure:
    transition: str
    activity: str
    conforming: int
    total: int

    @property
    def measure(self) -> float:
        return 1.0 if self.total == 0 else self.conforming / self.total


@dataclass
class JumpEdge:
    source: str
    target: str
    stage: str
    total: int
    mean: float


@dataclass
class DiagnosticsSummary:
    traces: int = 0
    arc_means: dict[tuple[str, str], float] = field(default_factory=dict)
    jump_edges: list[JumpEdge] = field(default_factory=list)
    measures: dict[str, TransitionMeasure] = field(default_factory=dict)
    termination_objects: int = 0
    termination_conforming: int = 0
    deviation_totals: dict[str, int] = field(default_factory=dict)
    jumps: int = 0
    transfers: int = 0
    fitness: float = 1.0

    @property
    def termination_measure(self) -> float:
        if self.termination_objects == 0:
            return 1.0
        return self.termination_conforming / self.termination_objects

    def measure_for(self, activity: str) -> float:
        for m in self.measures.values():
            if m.activity == activity:
                return m.measure
        raise KeyError(activity)

    def edge_totals(self) -> Counter:
        """Jumped tokens per (from, to) place pair, all stages merged."""
        out: Counter = Counter()
        for e in self.jump_edges:
            out[(e.source, e.target)] += e.total
        return out

    def to_dict(self) -> dict:
        return {
            "traces": self.traces,
            "fitness": self.fitness,
            "jumps": self.jumps,
            "transfers": self.transfers,
            "deviations": dict(self.deviation_totals),
            "arcs": [{"from": s, "to": t, "mean": m} for (s, t), m in self.arc_means.items()],
            "jump_edges": [
                {"from": e.source, "to": e.target, "stage": e.stage, "total": e.total, "mean": e.mean}
                for e in self.jump_edges
            ],
            "local_measures": [
                {
                    "transition": m.transition,
                    "activity": m.activity,
                    "conforming": m.conforming,
                    "total": m.total,
                    "measure": m.measure,
                }
                for m in self.measures.values()
            ],
            "termination": {
                "objects": self.termination_objects,
                "conforming": self.termination_conforming,
                "measure": self.termination_measure,
            },
        }


_KINDS = ("CONTROL_FLOW", "RULE_VIOLATION", "RESOURCE_CORRUPTED", "NONPROPER_TERMINATION")


def aggregate(results: Sequence[ReplayResult], cpn: CPN) -> DiagnosticsSummary:
    """Average flows and jumps over all traces and compute per-transition measures.

    A consumption by transition t is conforming when the consumed object did not
    have to jump into t's input place for that event.  Termination-phase jumps
    are reported under the pseudo-stage ``"termination"``.
    """
    n = len(results)
    transfers: Counter = Counter()
    jumps: Counter = Counter()
    via_model: Counter = Counter()
    via_jump: Counter = Counter()
    kinds: Counter = Counter()
    objects = term_jumps = 0
    for r in results:
        transfers.update(r.transfer_counts)
        jumps.update(r.jumps)
        via_model.update(r.consumed_via_model)
        via_jump.update(r.consumed_via_jump)
        kinds.update(d.kind.name for d in r.deviations)
        objects += r.objects
        term_jumps += sum(c for (_, _, stage), c in r.jumps.items() if stage == TERMINATION)

    summary = DiagnosticsSummary(traces=n)
    for arc in cpn.arcs:
        key = (arc.source, arc.target)
        summary.arc_means[key] = transfers[key] / n if n else 0.0
    for (src, dst, stage) in sorted(jumps):
        total = jumps[(src, dst, stage)]
        summary.jump_edges.append(JumpEdge(src, dst, stage, total, total / n if n else 0.0))
    for tid, t in cpn.transitions.items():
        summary.measures[tid] = TransitionMeasure(tid, t.activity, via_model[tid], via_model[tid] + via_jump[tid])
    summary.termination_objects = objects
    summary.termination_conforming = objects - term_jumps
    summary.deviation_totals = {k: kinds[k] for k in _KINDS}
    summary.jumps = sum(r.counters.j for r in results)
    summary.transfers = sum(r.counters.k for r in results)
    summary.fitness = log_fitness(results)
    return summary


def write_summary_json(summary: DiagnosticsSummary, path) -> None:
    Path(path).write_text(json.dumps(summary.to_dict(), indent=2) + "\n")


def _q(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def to_dot(cpn: CPN, summary: DiagnosticsSummary) -> str:
    lines = [f"digraph {_q(cpn.name)} {{", "  rankdir=LR;", '  node [fontname="Helvetica"];']
    for p in cpn.places.values():
        shape = "doublecircle" if p.role in ("source", "sink") else "circle"
        lines.append(f"  {_q(p.id)} [shape={shape}, label={_q(p.id + chr(10) + p.color.name)}];")
    for t in cpn.transitions.values():
        m = summary.measures.get(t.id)
        label = f"{t.id}\n{t.activity}"
        if m is not None:
            label += f"\n{m.measure:.2f}"
        lines.append(f"  {_q(t.id)} [shape=box, label={_q(label)}];")
    for arc in cpn.arcs:
        mean = summary.arc_means.get((arc.source, arc.target), 0.0)
        label = f"{arc.expression}\n{round(mean)}"
        lines.append(f"  {_q(arc.source)} -> {_q(arc.target)} [label={_q(label)}];")
    for (src, dst), total in sorted(summary.edge_totals().items()):
        if total == 0:
            continue
        mean = total / summary.traces if summary.traces else 0.0
        lines.append(f"  {_q(src)} -> {_q(dst)} [style=dotted, constraint=false, label={_q(str(round(mean)))}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def export_enhanced_model(cpn: CPN, summary: DiagnosticsSummary, path) -> None:
    Path(path).write_text(to_dot(cpn, summary))
