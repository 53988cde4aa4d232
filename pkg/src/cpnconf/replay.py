"""Object-centric token replay of traces on conservative-workflow nets.

Each event fires the transition carrying its activity label.  Objects whose
tokens are not where the transition needs them are moved there (a *jump*),
priority rules are checked before consumption, produced tokens are compared
with the event's post-state, and objects that never reach their sink are moved
there at the end.  Fitness is ``1 - jumps / transfers``.
"""

from __future__ import annotations

import enum
import logging
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .errors import DomainError, EvaluationError, InvariantViolation, LogValidationError, ModelLogMismatch
from .eventlog import EventLog, Trace, check_trace, distinct_objects
from .expr import evaluate_term
from .net import CPN, Marking, Place, bind
from .rules import preceding_token

log = logging.getLogger(__name__)

TERMINATION = "termination"


class DeviationKind(enum.Enum):
    CONTROL_FLOW = "CF"
    RULE_VIOLATION = "RV"
    RESOURCE_CORRUPTED = "RC"
    NONPROPER_TERMINATION = "NT"

    @property
    def code(self) -> str:
        return self.value


DETAIL_FIELDS = {
    DeviationKind.CONTROL_FLOW: ("from_place", "to_place"),
    DeviationKind.RULE_VIOLATION: ("place", "preceding"),
    DeviationKind.RESOURCE_CORRUPTED: ("attribute", "expected", "observed"),
    DeviationKind.NONPROPER_TERMINATION: ("resting_place", "sink_place"),
}


class _Undefined:
    """Placeholder for an output component the model could not compute."""

    def __repr__(self):
        return "undefined"

    def __reduce__(self):
        return (_undefined, ())


def _undefined():
    return UNDEFINED


UNDEFINED = _Undefined()


@dataclass(frozen=True)
class DeviationRecord:
    kind: DeviationKind
    trace_id: str
    object_id: str
    description: str
    detail: dict
    event_seq: Optional[int] = None
    timestamp: Optional[str] = None
    activity: Optional[str] = None

    def __post_init__(self):
        expected = DETAIL_FIELDS[self.kind]
        if tuple(self.detail) != expected:
            raise ValueError(f"{self.kind.name} detail must have fields {expected}, got {tuple(self.detail)}")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.name,
            "code": self.kind.code,
            "trace": self.trace_id,
            "event_seq": self.event_seq,
            "timestamp": self.timestamp,
            "activity": self.activity,
            "object": self.object_id,
            "description": self.description,
            "detail": {k: _plain(v) for k, v in self.detail.items()},
        }


def _plain(v):
    return None if v is UNDEFINED else v


@dataclass
class ReplayCounters:
    j: int = 0
    k: int = 0


def fitness(counters: ReplayCounters) -> float:
    """``1 - j/k``; 1.0 when nothing was transferred."""
    if counters.k == 0:
        return 1.0
    value = 1.0 - counters.j / counters.k
    if not 0.0 <= value <= 1.0:
        log.warning("fitness %.4f out of [0,1] (j=%d, k=%d); clamping", value, counters.j, counters.k)
        value = min(1.0, max(0.0, value))
    return value


@dataclass
class ReplayResult:
    trace_id: str
    deviations: list[DeviationRecord] = field(default_factory=list)
    counters: ReplayCounters = field(default_factory=ReplayCounters)
    # (from_place, to_place, stage) -> count; stage is a transition id or "termination"
    jumps: Counter = field(default_factory=Counter)
    # (source, target) arc -> tokens moved along it
    transfer_counts: Counter = field(default_factory=Counter)
    consumed_via_model: Counter = field(default_factory=Counter)
    consumed_via_jump: Counter = field(default_factory=Counter)
    events: int = 0
    objects: int = 0
    last_timestamp: Optional[str] = None

    @property
    def fitness(self) -> float:
        return fitness(self.counters)

    @property
    def jump_edges(self) -> Counter:
        out: Counter = Counter()
        for (src, dst, _), n in self.jumps.items():
            out[(src, dst)] += n
        return out

    def kind_counts(self) -> Counter:
        return Counter(d.kind for d in self.deviations)


def log_fitness(results: Sequence[ReplayResult]) -> float:
    return fitness(ReplayCounters(sum(r.counters.j for r in results), sum(r.counters.k for r in results)))


def populate_source_places(cpn: CPN, trace: Trace) -> Marking:
    """Put every distinct object of ``trace`` in the source place of its color."""
    marking = Marking()
    for oid, (cname, obj) in distinct_objects(trace).items():
        color = cpn.colors.get(cname)
        if color is None:
            raise ModelLogMismatch(f"trace {trace.trace_id}: color {cname} of {oid} is not in the model")
        source = cpn.source_of(color)
        if source is None:
            raise ModelLogMismatch(f"color {cname} has no source place")
        marking.add(source.id, color.coerce(obj.values))
    return marking


def jump(marking: Marking, object_id, target: Place, cpn: Optional[CPN] = None) -> str:
    """Move the token of ``object_id`` into ``target`` unchanged; return the place it left."""
    found = marking.find(object_id)
    if found is None:
        raise InvariantViolation(f"no token with identifier {object_id!r} in the marking")
    src, token = found
    if src == target.id:
        raise ValueError(f"{object_id} is already in {target.id}")
    if cpn is not None and cpn.places[src].color != target.color:
        raise ModelLogMismatch(f"{object_id} has color {cpn.places[src].color.name}, {target.id} holds {target.color.name}")
    marking.remove(src, token)
    marking.add(target.id, token)
    return src


def _produce_lenient(cpn: CPN, t, b) -> list[tuple[Place, tuple]]:
    out = []
    for place, arc in cpn.outputs(t):
        values = []
        for term, dom in zip(arc.expression.terms, place.color.domains):
            try:
                values.append(dom.coerce(evaluate_term(term, b)))
            except (DomainError, EvaluationError) as exc:
                log.debug("cannot compute %s on (%s,%s): %s", term, t.id, place.id, exc)
                values.append(UNDEFINED)
        out.append((place, tuple(values)))
    return out


def replay_trace(cpn: CPN, trace: Trace) -> ReplayResult:
    """Replay one trace and collect deviations, counters and flow statistics.

    The net must be a valid conservative-workflow net with an empty initial
    marking and the trace must be syntactically correct against it.
    """
    res = ReplayResult(trace.trace_id, events=len(trace.events))
    objects = distinct_objects(trace)
    res.objects = len(objects)
    marking = populate_source_places(cpn, trace)
    counters = res.counters

    def record(kind, ev, oid, description, **detail):
        res.deviations.append(
            DeviationRecord(
                kind,
                trace.trace_id,
                oid,
                description,
                detail,
                event_seq=ev.seq if ev is not None else None,
                timestamp=ev.timestamp if ev is not None else None,
                activity=ev.activity if ev is not None else None,
            )
        )

    for ev in trace.events:
        res.last_timestamp = ev.timestamp if ev.timestamp is not None else res.last_timestamp
        t = cpn.transition_for(ev.activity)
        if t is None:
            raise LogValidationError(f"trace {trace.trace_id} event {ev.seq}: no transition labeled {ev.activity}")

        chosen: dict[str, tuple] = {}
        for obj in ev.objects:
            color = cpn.colors[obj.color]
            place = cpn.input_place_for(t, color)
            if place is None:
                raise LogValidationError(
                    f"trace {trace.trace_id} event {ev.seq}: {t.id} has no input place for {obj.id}"
                )
            token = marking.in_place(place.id, obj.id)
            if token is None:
                src = jump(marking, obj.id, place, cpn)
                counters.j += 1
                res.jumps[(src, place.id, t.id)] += 1
                res.consumed_via_jump[t.id] += 1
                record(
                    DeviationKind.CONTROL_FLOW,
                    ev,
                    obj.id,
                    f"{obj.id} not in {place.id} for '{ev.activity}': jumped from {src} to {place.id}",
                    from_place=src,
                    to_place=place.id,
                )
                token = marking.in_place(place.id, obj.id)
            else:
                res.consumed_via_model[t.id] += 1

            rule = t.priority.for_place(place.id) if t.priority is not None else None
            if rule is not None:
                ahead = preceding_token(rule, place.color.attributes, marking.tokens(place.id), token)
                if ahead is not None:
                    record(
                        DeviationKind.RULE_VIOLATION,
                        ev,
                        obj.id,
                        f"{obj.id} consumed from {place.id} before {ahead[0]}, which has priority under {rule.label()}",
                        place=place.id,
                        preceding=ahead[0],
                    )
            chosen[place.id] = token

        binding = bind(cpn, t, chosen)
        produced = _produce_lenient(cpn, t, binding)
        for place, arc in cpn.inputs(t):
            marking.remove(place.id, chosen[place.id])
            res.transfer_counts[(arc.source, arc.target)] += 1
        for place, token in produced:
            marking.add(place.id, token)
        for place, arc in cpn.outputs(t):
            res.transfer_counts[(arc.source, arc.target)] += 1
        counters.k += len(ev.objects)

        for obj in ev.objects:
            color = cpn.colors[obj.color]
            out_place = next((p for p, tok in produced if tok[0] == obj.id), None)
            if out_place is None:
                raise InvariantViolation(f"{t.id} produced no token for {obj.id}")
            model_tok = marking.in_place(out_place.id, obj.id)
            observed = color.coerce(obj.values)
            if model_tok == observed:
                continue
            for attr, expected, seen in zip(color.attributes, model_tok, observed):
                if expected is UNDEFINED or expected != seen:
                    shown = "undefined" if expected is UNDEFINED else expected
                    record(
                        DeviationKind.RESOURCE_CORRUPTED,
                        ev,
                        obj.id,
                        f"{attr} of {obj.id} is {seen} after '{ev.activity}', model expects {shown}",
                        attribute=attr,
                        expected=expected,
                        observed=seen,
                    )
            marking.remove(out_place.id, model_tok)
            marking.add(out_place.id, observed)

    for oid, (cname, _) in objects.items():
        color = cpn.colors[cname]
        sink = cpn.sink_of(color)
        if sink is None:
            raise ModelLogMismatch(f"color {cname} has no sink place")
        if marking.in_place(sink.id, oid) is not None:
            continue
        src = jump(marking, oid, sink, cpn)
        counters.j += 1
        res.jumps[(src, sink.id, TERMINATION)] += 1
        record(
            DeviationKind.NONPROPER_TERMINATION,
            None,
            oid,
            f"{oid} not fully processed: rests in {src}, never reached sink {sink.id}",
            resting_place=src,
            sink_place=sink.id,
        )

    for sink in cpn.sinks():
        for token in marking.tokens(sink.id):
            marking.remove(sink.id, token)
    counters.k += len(objects)
    if not marking.is_empty():
        raise InvariantViolation(f"tokens left outside sinks after replay of {trace.trace_id}: {marking!r}")
    return res


@dataclass
class LogReplay:
    results: list[ReplayResult]
    skipped: list[tuple[str, list[str]]] = field(default_factory=list)

    @property
    def fitness(self) -> float:
        return log_fitness(self.results)


def _replay_job(args):
    cpn, trace = args
    return replay_trace(cpn, trace)


def replay_log(cpn: CPN, log_: EventLog, jobs: int = 1, skip_invalid: bool = True) -> LogReplay:
    """Replay every trace; results come back in log order whatever ``jobs`` is.

    Syntactically incorrect traces are skipped (with their reasons) when
    ``skip_invalid`` is set, otherwise they raise :class:`LogValidationError`.
    """
    good: list[Trace] = []
    skipped = []
    for trace in log_:
        report = check_trace(trace, cpn)
        if report.ok:
            good.append(trace)
        elif skip_invalid:
            log.warning("skipping trace %s: %s", trace.trace_id, report.violations[0].message)
            skipped.append((trace.trace_id, [v.message for v in report]))
        else:
            raise LogValidationError(str(report))
    if jobs > 1 and len(good) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_replay_job, [(cpn, t) for t in good], chunksize=max(1, len(good) // (4 * jobs))))
    else:
        results = [replay_trace(cpn, t) for t in good]
    return LogReplay(results, skipped)
