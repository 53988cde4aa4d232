"""Structural checks: well-formedness and conservative-workflow restrictions.

Violations are returned as data; nothing in this module raises on a bad net.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .errors import ConfigurationError
from .expr import Var
from .net import CPN, term_domain_ok


@dataclass(frozen=True)
class Violation:
    code: str
    message: str

    def __str__(self) -> str:
        return f"[{self.code}] {self.message}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    def add(self, code: str, message: str) -> None:
        self.violations.append(Violation(code, message))

    @property
    def ok(self) -> bool:
        return not self.violations

    def codes(self) -> set[str]:
        return {v.code for v in self.violations}

    def extend(self, other: "ValidationReport") -> None:
        self.violations.extend(other.violations)

    def __len__(self) -> int:
        return len(self.violations)

    def __iter__(self):
        return iter(self.violations)

    def __str__(self) -> str:
        return "\n".join(map(str, self.violations)) if self.violations else "no violations"


def validate_syntax(cpn: CPN) -> ValidationReport:
    report = ValidationReport()
    overlap = set(cpn.places) & set(cpn.transitions)
    for node in sorted(overlap):
        report.add("node-overlap", f"{node} is both a place and a transition")

    seen: dict[str, str] = {}
    for t in cpn.transitions.values():
        if t.activity in seen:
            report.add("duplicate-activity", f"duplicate activity label {t.activity!r} on {seen[t.activity]} and {t.id}")
        else:
            seen[t.activity] = t.id

    for arc in cpn.arcs:
        label = f"arc ({arc.source},{arc.target})"
        pt = arc.source in cpn.places and arc.target in cpn.transitions
        tp = arc.source in cpn.transitions and arc.target in cpn.places
        if not (pt or tp):
            report.add("arc-endpoints", f"{label} must join exactly one place and one transition")
            continue
        place = cpn.places[arc.source if pt else arc.target]
        tid = arc.target if pt else arc.source
        expr = arc.expression
        if expr.arity != place.color.arity:
            report.add(
                "expression-color",
                f"expression color mismatch on {label}: {expr} has {expr.arity} components, "
                f"{place.id} has color {place.color.name} with {place.color.arity}",
            )
            continue
        if not isinstance(expr.head, Var):
            report.add("identifier-term", f"{label}: first component of {expr} must be a variable")
        types = cpn.variable_types[tid]
        for i, (term, dom) in enumerate(zip(expr.terms, place.color.domains), start=1):
            reason = term_domain_ok(term, dom, types)
            if reason:
                report.add("expression-color", f"expression color mismatch on {label}, component {i}: {reason}")

    pairs = {(a.source, a.target) for a in cpn.arcs}
    if len(pairs) != len(cpn.arcs):
        report.add("duplicate-arc", "more than one arc joins the same pair of nodes")

    for t in cpn.transitions.values():
        if t.priority is None:
            continue
        inputs = {p.id: p for p, _ in cpn.inputs(t)}
        for pid, rule in t.priority.local_rules.items():
            if pid not in inputs:
                report.add("priority-rule", f"{t.id}: priority rule on {pid}, which is not an input place")
                continue
            try:
                rule.resolve(inputs[pid].color.attributes)
            except ConfigurationError as exc:
                report.add("priority-rule", f"{t.id}: {exc}")

    for pid, token in cpn.initial_marking:
        place = cpn.places.get(pid)
        if place is None:
            report.add("initial-marking", f"initial marking refers to unknown place {pid}")
            continue
        try:
            if place.color.coerce(token) != tuple(token):
                raise ValueError
        except Exception:
            report.add("initial-marking", f"token {token!r} in {pid} is not of color {place.color.name}")
    return report


def _head(expr):
    return expr.head.name if isinstance(expr.head, Var) else None


def validate_conservative_workflow(cpn: CPN) -> ValidationReport:
    report = ValidationReport()

    # (1) identifier-preserving bijection between input and output arcs
    for t in cpn.transitions.values():
        ins = [(p, _head(a.expression)) for p, a in cpn.inputs(t)]
        outs = [(p, _head(a.expression)) for p, a in cpn.outputs(t)]
        for p, v in ins:
            matches = [q for q, w in outs if v is not None and w == v]
            if len(matches) != 1:
                report.add(
                    "cw1",
                    f"condition 1 violated at {t.id}: input arc from {p.id} (identifier {v}) has "
                    f"{len(matches)} output arcs carrying the same identifier",
                )
        for q, w in outs:
            matches = [p for p, v in ins if w is not None and v == w]
            if len(matches) != 1:
                report.add(
                    "cw1",
                    f"condition 1 violated at {t.id}: output arc to {q.id} (identifier {w}) has "
                    f"{len(matches)} input arcs carrying the same identifier",
                )

    # (2) distinct identifiers in the initial marking
    ids = cpn.initial_marking.identifiers()
    dupes = sorted({str(i) for i in ids if ids.count(i) > 1})
    for d in dupes:
        report.add("cw2", f"condition 2 violated: identifier {d} occurs more than once in the initial marking")

    # (3) one source, one sink and a monochrome path per color
    for color in _distinct_colors(cpn):
        srcs = [p for p in cpn.sources() if p.color == color]
        snks = [p for p in cpn.sinks() if p.color == color]
        if len(srcs) != 1 or len(snks) != 1:
            report.add(
                "cw3",
                f"condition 3 violated for color {color.name}: {len(srcs)} source and {len(snks)} sink places (need 1 each)",
            )
            continue
        if not _monochrome_path(cpn, srcs[0].id, snks[0].id):
            report.add(
                "cw3",
                f"condition 3 violated for color {color.name}: no path from {srcs[0].id} to {snks[0].id} "
                f"through places of that color",
            )

    # (4) input places pairwise color-distinct, same for output places
    for t in cpn.transitions.values():
        for side, places in (("input", [p for p, _ in cpn.inputs(t)]), ("output", [p for p, _ in cpn.outputs(t)])):
            for i, p in enumerate(places):
                for q in places[i + 1:]:
                    if p.color == q.color:
                        report.add(
                            "cw4",
                            f"condition 4 violated at {t.id}: {side} places {p.id} and {q.id} share color {p.color.name}",
                        )
    return report


def _distinct_colors(cpn: CPN):
    out = []
    for c in list(cpn.colors.values()) + [p.color for p in cpn.places.values()]:
        if c not in out:
            out.append(c)
    return out


def _monochrome_path(cpn: CPN, src: str, dst: str) -> bool:
    color = cpn.places[src].color
    succ: dict[str, set[str]] = {}
    for tid in cpn.transitions:
        ins = [p.id for p, _ in cpn.inputs(tid) if p.color == color]
        outs = [p.id for p, _ in cpn.outputs(tid) if p.color == color]
        for p in ins:
            succ.setdefault(p, set()).update(outs)
    seen = {src}
    queue = deque([src])
    while queue:
        p = queue.popleft()
        if p == dst:
            return True
        for q in sorted(succ.get(p, ())):
            if q not in seen:
                seen.add(q)
                queue.append(q)
    return False
