"""Event logs: data model, object extraction, syntactic checks and JSONL I/O.

One event per line::

    {"trace": "OB1", "seq": 1, "ts": "09:30:00", "activity": "submit buy order",
     "objects": [{"color": "OB", "values": ["b1", 1, 22.0, 5]}]}

Lines starting with ``#`` are comments; a first comment line holding a JSON
object is read back as log metadata.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Union

from .errors import DomainError, LogFormatError, LogValidationError
from .net import CPN
from .validation import ValidationReport


@dataclass(frozen=True)
class ObjectState:
    color: str
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        if not self.values:
            raise LogValidationError("an object needs at least an identifier")

    @property
    def id(self):
        return self.values[0]


@dataclass(frozen=True)
class EventRecord:
    activity: str
    objects: tuple[ObjectState, ...]
    seq: int
    timestamp: Optional[str] = None

    def __post_init__(self):
        objs = tuple(sorted(self.objects, key=lambda o: str(o.id)))
        if not objs:
            raise LogValidationError(f"event {self.seq} ({self.activity}) has no objects")
        ids = [o.id for o in objs]
        if len(set(ids)) != len(ids):
            raise LogValidationError(f"event {self.seq} ({self.activity}) lists an object identifier twice")
        object.__setattr__(self, "objects", objs)


@dataclass(frozen=True)
class Trace:
    trace_id: str
    events: tuple[EventRecord, ...]

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        if not self.events:
            raise LogValidationError(f"trace {self.trace_id} is empty")
        for a, b in zip(self.events, self.events[1:]):
            if b.seq <= a.seq:
                raise LogValidationError(f"trace {self.trace_id}: event seq {b.seq} does not follow {a.seq}")

    def __len__(self) -> int:
        return len(self.events)


@dataclass
class EventLog:
    traces: list[Trace] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.traces)

    def __iter__(self):
        return iter(self.traces)

    @property
    def event_count(self) -> int:
        return sum(len(t) for t in self.traces)

    def select(self, trace_ids: Iterable[str]) -> "EventLog":
        wanted = set(trace_ids)
        return EventLog([t for t in self.traces if t.trace_id in wanted], dict(self.meta))


def distinct_objects(trace: Trace) -> dict[object, tuple[str, ObjectState]]:
    """Map every object identifier in ``trace`` to its color and first-seen state."""
    out: dict[object, tuple[str, ObjectState]] = {}
    for ev in trace.events:
        for obj in ev.objects:
            prev = out.get(obj.id)
            if prev is None:
                out[obj.id] = (obj.color, obj)
            elif prev[0] != obj.color or len(prev[1].values) != len(obj.values):
                raise LogValidationError(
                    f"trace {trace.trace_id}: object {obj.id} appears with color {prev[0]} and {obj.color}"
                )
    return out


def check_event(event: EventRecord, cpn: CPN) -> list[str]:
    """Reasons why ``event`` is not syntactically correct against ``cpn``."""
    t = cpn.transition_for(event.activity)
    if t is None:
        return [f"no transition labeled {event.activity}"]
    problems = []
    objs = []
    for obj in event.objects:
        color = cpn.colors.get(obj.color)
        if color is None:
            problems.append(f"object {obj.id} has unknown color {obj.color}")
            continue
        try:
            color.coerce(obj.values)
        except DomainError as exc:
            problems.append(f"object {obj.id}: {exc}")
        objs.append((obj, color))
    inputs = [p for p, _ in cpn.inputs(t)]
    for p in inputs:
        hits = [o for o, c in objs if c == p.color]
        if not hits:
            problems.append(f"no object for input place {p.id}")
        elif len(hits) > 1:
            problems.append(f"{len(hits)} objects compete for input place {p.id}")
    for o, c in objs:
        if not any(p.color == c for p in inputs):
            problems.append(f"extra object {o.id}: {t.id} has no input place of color {c.name}")
    return problems


def check_trace(trace: Trace, cpn: CPN) -> ValidationReport:
    report = ValidationReport()
    try:
        distinct_objects(trace)
    except LogValidationError as exc:
        report.add("object-color", str(exc))
    for ev in trace.events:
        for reason in check_event(ev, cpn):
            report.add("event", f"trace {trace.trace_id} event {ev.seq} ({ev.activity}): {reason}")
    return report


def check_syntactic_correctness(log: EventLog, cpn: CPN) -> ValidationReport:
    report = ValidationReport()
    for trace in log:
        report.extend(check_trace(trace, cpn))
    return report


def _event_to_json(trace_id: str, ev: EventRecord) -> str:
    rec: dict = {"trace": trace_id, "seq": ev.seq}
    if ev.timestamp is not None:
        rec["ts"] = ev.timestamp
    rec["activity"] = ev.activity
    rec["objects"] = [{"color": o.color, "values": list(o.values)} for o in ev.objects]
    return json.dumps(rec, separators=(",", ":"), ensure_ascii=False)


def dumps_log(log: EventLog) -> str:
    buf = io.StringIO()
    if log.meta:
        buf.write("# " + json.dumps(log.meta, sort_keys=True, separators=(",", ":")) + "\n")
    for trace in log:
        for ev in trace.events:
            buf.write(_event_to_json(trace.trace_id, ev) + "\n")
    return buf.getvalue()


def write_log(log: EventLog, path) -> None:
    Path(path).write_text(dumps_log(log), encoding="utf-8")


def _parse_object(raw, lineno: int, cpn: Optional[CPN]) -> ObjectState:
    if not isinstance(raw, dict) or "color" not in raw or "values" not in raw:
        raise LogValidationError(f"line {lineno}: object must have 'color' and 'values'")
    color, values = raw["color"], raw["values"]
    if not isinstance(color, str) or not isinstance(values, list) or not values:
        raise LogValidationError(f"line {lineno}: malformed object {raw!r}")
    if not isinstance(values[0], str):
        raise LogValidationError(f"line {lineno}: object identifier {values[0]!r} must be a string")
    if cpn is not None:
        col = cpn.colors.get(color)
        if col is None:
            raise LogValidationError(f"line {lineno}: unknown color {color!r}")
        try:
            values = list(col.coerce(values))
        except DomainError as exc:
            raise LogValidationError(f"line {lineno}: {exc}") from None
    return ObjectState(color, tuple(values))


def loads_log(text: str, cpn: Optional[CPN] = None) -> EventLog:
    """Parse JSONL text. With ``cpn`` given, values are coerced to the declared colors."""
    meta: dict = {}
    grouped: dict[str, list[EventRecord]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            if not meta and not grouped:
                try:
                    candidate = json.loads(stripped[1:])
                except json.JSONDecodeError:
                    candidate = None
                if isinstance(candidate, dict):
                    meta = candidate
            continue
        try:
            rec = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise LogFormatError(f"invalid JSON: {exc.msg}", line=lineno) from None
        if not isinstance(rec, dict):
            raise LogValidationError(f"line {lineno}: event must be a JSON object")
        for key in ("trace", "seq", "activity", "objects"):
            if key not in rec:
                raise LogValidationError(f"line {lineno}: missing field {key!r}")
        seq = rec["seq"]
        if isinstance(seq, bool) or not isinstance(seq, int):
            raise LogValidationError(f"line {lineno}: seq must be an integer")
        ts = rec.get("ts")
        if ts is not None and not isinstance(ts, str):
            raise LogValidationError(f"line {lineno}: ts must be a string")
        if not isinstance(rec["activity"], str):
            raise LogValidationError(f"line {lineno}: activity must be a string")
        raw_objs = rec["objects"]
        if not isinstance(raw_objs, list) or not raw_objs:
            raise LogValidationError(f"line {lineno}: objects must be a non-empty list")
        objs = tuple(_parse_object(o, lineno, cpn) for o in raw_objs)
        trace_id = str(rec["trace"])
        events = grouped.setdefault(trace_id, [])
        if events and seq <= events[-1].seq:
            raise LogValidationError(f"line {lineno}: seq {seq} does not follow {events[-1].seq} in trace {trace_id}")
        try:
            events.append(EventRecord(rec["activity"], objs, seq, ts))
        except LogValidationError as exc:
            raise LogValidationError(f"line {lineno}: {exc}") from None
    return EventLog([Trace(tid, tuple(evs)) for tid, evs in grouped.items()], meta)


def read_log(path: Union[str, Path], cpn: Optional[CPN] = None) -> EventLog:
    return loads_log(Path(path).read_text(encoding="utf-8"), cpn)
