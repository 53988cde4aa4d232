"""Colored Petri net structure, markings, enabling and firing."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Optional

from .errors import DomainError, EvaluationError, ModelError, NotEnabledError
from .expr import BinOp, Const, Expression, Var, evaluate_term
from .rules import PriorityRule

IDENTIFIER = "identifier"
NATURAL = "natural"
POSITIVE_REAL = "positive-real"
STRING = "string"
DOMAIN_KINDS = (IDENTIFIER, NATURAL, POSITIVE_REAL, STRING)
NUMERIC_KINDS = (NATURAL, POSITIVE_REAL)

SOURCE = "source"
SINK = "sink"
INTERNAL = "internal"

Token = tuple
Binding = dict


@dataclass(frozen=True)
class DataDomain:
    name: str
    kind: str

    def __post_init__(self):
        if self.kind not in DOMAIN_KINDS:
            raise ModelError(f"domain {self.name!r}: unknown kind {self.kind!r}")

    @property
    def numeric(self) -> bool:
        return self.kind in NUMERIC_KINDS

    def contains(self, value) -> bool:
        try:
            return self.coerce(value) == value
        except DomainError:
            return False

    def coerce(self, value):
        """Return ``value`` converted to this domain's canonical Python type."""
        if self.kind in (IDENTIFIER, STRING):
            if not isinstance(value, str):
                raise DomainError(f"{value!r} is not a string in domain {self.name}")
            return value
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise DomainError(f"{value!r} is not numeric in domain {self.name}")
        if self.kind == NATURAL:
            if isinstance(value, float):
                if not value.is_integer():
                    raise DomainError(f"{value!r} is not a natural number (domain {self.name})")
                value = int(value)
            if value < 0:
                raise DomainError(f"{value!r} is negative; domain {self.name} is the naturals")
            return value
        value = float(value)
        if not math.isfinite(value) or value <= 0:
            raise DomainError(f"{value!r} is not a positive real (domain {self.name})")
        return value


@dataclass(frozen=True, eq=False)
class Color:
    """A Cartesian product of domains plus the attribute names used to access it."""

    name: str
    domains: tuple[DataDomain, ...]
    attributes: tuple[str, ...]

    def __post_init__(self):
        if not self.domains:
            raise ModelError(f"color {self.name!r} has no domains")
        if len(self.attributes) != len(self.domains):
            raise ModelError(f"color {self.name!r}: {len(self.attributes)} attribute names for {len(self.domains)} domains")
        if len(set(self.attributes)) != len(self.attributes):
            raise ModelError(f"color {self.name!r}: duplicate attribute names")
        if self.domains[0].kind != IDENTIFIER:
            raise ModelError(f"color {self.name!r}: first domain must be an identifier set")

    def __eq__(self, other):
        return isinstance(other, Color) and self.domains == other.domains

    def __hash__(self):
        return hash(self.domains)

    @property
    def arity(self) -> int:
        return len(self.domains)

    def access(self, token: Token, attribute: str):
        """Member access: the value of ``attribute`` in ``token``."""
        return token[self.attributes.index(attribute)]

    def coerce(self, values) -> Token:
        if len(values) != self.arity:
            raise DomainError(f"{tuple(values)!r} has {len(values)} components, color {self.name} has {self.arity}")
        return tuple(d.coerce(v) for d, v in zip(self.domains, values))


@dataclass(frozen=True)
class Place:
    id: str
    color: Color
    role: str = INTERNAL

    def __post_init__(self):
        if self.role not in (SOURCE, SINK, INTERNAL):
            raise ModelError(f"place {self.id!r}: role must be source, sink or internal")


@dataclass(frozen=True)
class Transition:
    id: str
    activity: str
    priority: Optional[PriorityRule] = None


@dataclass(frozen=True)
class Arc:
    source: str
    target: str
    expression: Expression


class Marking:
    """Per-place multisets of tokens. Insertion order is kept for reproducibility."""

    def __init__(self, tokens: Optional[Mapping[str, Iterable[Token]]] = None):
        self._m: dict[str, list[Token]] = {}
        if tokens:
            for p, toks in tokens.items():
                for t in toks:
                    self.add(p, t)

    def add(self, place: str, token: Token) -> None:
        self._m.setdefault(place, []).append(tuple(token))

    def remove(self, place: str, token: Token) -> None:
        toks = self._m.get(place, [])
        try:
            toks.remove(tuple(token))
        except ValueError:
            raise NotEnabledError(f"token {token!r} not in {place}") from None
        if not toks:
            del self._m[place]

    def tokens(self, place: str) -> list[Token]:
        return list(self._m.get(place, ()))

    def contains(self, place: str, token: Token) -> bool:
        return tuple(token) in self._m.get(place, ())

    def find(self, ident) -> Optional[tuple[str, Token]]:
        """Locate the token whose identifier is ``ident``."""
        for p, toks in self._m.items():
            for t in toks:
                if t[0] == ident:
                    return p, t
        return None

    def in_place(self, place: str, ident) -> Optional[Token]:
        for t in self._m.get(place, ()):
            if t[0] == ident:
                return t
        return None

    def places(self) -> list[str]:
        return list(self._m)

    def identifiers(self) -> list:
        return [t[0] for toks in self._m.values() for t in toks]

    def copy(self) -> "Marking":
        m = Marking()
        m._m = {p: list(t) for p, t in self._m.items()}
        return m

    def is_empty(self) -> bool:
        return not self._m

    def __len__(self) -> int:
        return sum(len(t) for t in self._m.values())

    def __iter__(self) -> Iterator[tuple[str, Token]]:
        for p, toks in self._m.items():
            for t in toks:
                yield p, t

    def __eq__(self, other):
        if not isinstance(other, Marking):
            return NotImplemented
        norm = lambda m: {p: sorted(map(repr, t)) for p, t in m._m.items() if t}
        return norm(self) == norm(other)

    def __repr__(self):
        return f"Marking({self._m!r})"

    def to_dict(self) -> dict[str, list[Token]]:
        return {p: list(t) for p, t in self._m.items()}


@dataclass(frozen=True)
class CPN:
    domains: Mapping[str, DataDomain]
    colors: Mapping[str, Color]
    places: Mapping[str, Place]
    transitions: Mapping[str, Transition]
    arcs: tuple[Arc, ...]
    initial_marking: Marking = field(default_factory=Marking, compare=False)
    name: str = "net"

    def __hash__(self):
        return id(self)

    @cached_property
    def _inputs(self) -> dict[str, list[tuple[Place, Arc]]]:
        out: dict[str, list] = {t: [] for t in self.transitions}
        for a in self.arcs:
            if a.target in self.transitions and a.source in self.places:
                out[a.target].append((self.places[a.source], a))
        return out

    @cached_property
    def _outputs(self) -> dict[str, list[tuple[Place, Arc]]]:
        out: dict[str, list] = {t: [] for t in self.transitions}
        for a in self.arcs:
            if a.source in self.transitions and a.target in self.places:
                out[a.source].append((self.places[a.target], a))
        return out

    @cached_property
    def _by_activity(self) -> dict[str, Transition]:
        out = {}
        for t in self.transitions.values():
            out.setdefault(t.activity, t)
        return out

    def inputs(self, t) -> list[tuple[Place, Arc]]:
        return self._inputs[_tid(t)]

    def outputs(self, t) -> list[tuple[Place, Arc]]:
        return self._outputs[_tid(t)]

    def transition_for(self, activity: str) -> Optional[Transition]:
        return self._by_activity.get(activity)

    def input_place_for(self, t, color: Color) -> Optional[Place]:
        for p, _ in self.inputs(t):
            if p.color == color:
                return p
        return None

    def sources(self) -> list[Place]:
        return [p for p in self.places.values() if p.role == SOURCE]

    def sinks(self) -> list[Place]:
        return [p for p in self.places.values() if p.role == SINK]

    def source_of(self, color: Color) -> Optional[Place]:
        return next((p for p in self.sources() if p.color == color), None)

    def sink_of(self, color: Color) -> Optional[Place]:
        return next((p for p in self.sinks() if p.color == color), None)

    @cached_property
    def variable_types(self) -> dict[str, dict[str, DataDomain]]:
        """Per transition, the domain of each variable appearing as a bare term.

        On conflicting usages the first one (input arcs first) wins;
        :func:`validate_syntax` reports the conflict.
        """
        out: dict[str, dict[str, DataDomain]] = {}
        for tid in self.transitions:
            types: dict[str, DataDomain] = {}
            for place, arc in self.inputs(tid) + self.outputs(tid):
                if arc.expression.arity != place.color.arity:
                    continue
                for term, dom in zip(arc.expression.terms, place.color.domains):
                    if isinstance(term, Var):
                        types.setdefault(term.name, dom)
            out[tid] = types
        return out


def _tid(t) -> str:
    return t.id if isinstance(t, Transition) else t


def evaluate(expression: Expression, binding: Mapping[str, object], color: Color) -> Token:
    """Evaluate an arc expression under ``binding`` into a token of ``color``."""
    values = tuple(evaluate_term(term, binding) for term in expression.terms)
    return color.coerce(values)


def enabled(cpn: CPN, marking: Marking, t, b: Mapping[str, object]) -> bool:
    for place, arc in cpn.inputs(t):
        try:
            token = evaluate(arc.expression, b, place.color)
        except DomainError:
            return False
        if not marking.contains(place.id, token):
            return False
    return True


def produce(cpn: CPN, t, b: Mapping[str, object]) -> list[tuple[Place, Token]]:
    """Tokens created on the output arcs of ``t`` under binding ``b``."""
    return [(place, evaluate(arc.expression, b, place.color)) for place, arc in cpn.outputs(t)]


def fire(cpn: CPN, marking: Marking, t, b: Mapping[str, object]) -> Marking:
    """Return the successor marking; ``marking`` itself is left untouched."""
    if not enabled(cpn, marking, t, b):
        raise NotEnabledError(f"transition {_tid(t)} is not enabled under binding {dict(b)!r}")
    produced = produce(cpn, t, b)
    new = marking.copy()
    for place, arc in cpn.inputs(t):
        new.remove(place.id, evaluate(arc.expression, b, place.color))
    for place, token in produced:
        new.add(place.id, token)
    return new


def match(expression: Expression, token: Token, binding: Optional[dict] = None) -> Optional[dict]:
    """Extend ``binding`` so that ``expression`` evaluates to ``token``; None if impossible.

    Function terms on input arcs cannot be inverted, so they are checked after
    the plain variables are bound.
    """
    b = dict(binding or {})
    if len(expression.terms) != len(token):
        return None
    deferred = []
    for term, value in zip(expression.terms, token):
        if isinstance(term, Var):
            if term.name in b and b[term.name] != value:
                return None
            b[term.name] = value
        elif isinstance(term, Const):
            if term.value != value:
                return None
        else:
            deferred.append((term, value))
    for term, value in deferred:
        try:
            if evaluate_term(term, b) != value:
                return None
        except EvaluationError:
            return None
    return b


def bind(cpn: CPN, t, tokens: Mapping[str, Token]) -> dict:
    """Build the binding that consumes ``tokens[place_id]`` from each input place."""
    b: dict = {}
    for place, arc in cpn.inputs(t):
        if place.id not in tokens:
            raise EvaluationError(f"no token chosen for input place {place.id}")
        nb = match(arc.expression, tokens[place.id], b)
        if nb is None:
            raise EvaluationError(f"token {tokens[place.id]!r} does not match {arc.expression} on ({place.id},{_tid(t)})")
        b = nb
    return b


def term_domain_ok(term, domain: DataDomain, var_types: Mapping[str, DataDomain]) -> Optional[str]:
    """Return a reason string when ``term`` cannot produce a value of ``domain``."""
    if isinstance(term, Var):
        declared = var_types.get(term.name)
        if declared is not None and declared != domain:
            return f"variable {term.name} has type {declared.name}, position needs {domain.name}"
        return None
    if isinstance(term, Const):
        if not domain.contains(term.value):
            return f"constant {term.value!r} is not in domain {domain.name}"
        return None
    if not domain.numeric:
        return f"arithmetic term {term} in non-numeric domain {domain.name}"
    for v in sorted(term.variables()):
        vt = var_types.get(v)
        if vt is None:
            return f"variable {v} in {term} is never bound by a bare term"
        if not vt.numeric:
            return f"variable {v} in {term} has non-numeric type {vt.name}"
    return None


__all__ = [
    "Arc",
    "BinOp",
    "Binding",
    "CPN",
    "Color",
    "DataDomain",
    "Marking",
    "Place",
    "Token",
    "Transition",
    "bind",
    "enabled",
    "evaluate",
    "fire",
    "match",
    "produce",
]
