"""JSON model files.

Layout::

    {
      "name": "...",
      "domains": [{"name": "O_B", "kind": "identifier"}, ...],
      "colors": [{"name": "OB", "domains": ["O_B", "N", "R+", "N"],
                  "attributes": ["id", "tsub", "price", "qty"]}, ...],
      "places": [{"id": "p1", "color": "OB", "role": "source"}, ...],
      "transitions": [{"id": "t5", "activity": "trade1",
                       "priority": {"p5": "price-time-buy",
                                    "p6": [["price", "asc"], ["tsub", "asc"]]}}, ...],
      "arcs": [{"from": "p1", "to": "t1", "expr": "(b,ts,pr,q)"}, ...],
      "initial_marking": {"p1": [["b1", 1, 22.0, 5]]}
    }

``priority`` values are either a built-in rule name or an inline list of
``[attribute, direction]`` pairs.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any

from .errors import DomainError, ModelError
from .expr import parse_expression
from .net import CPN, Arc, Color, DataDomain, Marking, Place, Transition
from .rules import PriorityRule, local_rule_from_json


def _require(d: dict, key: str, where: str):
    try:
        return d[key]
    except (KeyError, TypeError):
        raise ModelError(f"{where}: missing field {key!r}") from None


def cpn_from_dict(data: dict[str, Any]) -> CPN:
    if not isinstance(data, dict):
        raise ModelError("model must be a JSON object")
    domains: dict[str, DataDomain] = {}
    for i, d in enumerate(_require(data, "domains", "model")):
        dom = DataDomain(str(_require(d, "name", f"domains[{i}]")), str(_require(d, "kind", f"domains[{i}]")))
        if dom.name in domains:
            raise ModelError(f"duplicate domain {dom.name!r}")
        domains[dom.name] = dom

    colors: dict[str, Color] = {}
    for i, c in enumerate(_require(data, "colors", "model")):
        name = str(_require(c, "name", f"colors[{i}]"))
        if name in colors:
            raise ModelError(f"duplicate color {name!r}")
        try:
            doms = tuple(domains[d] for d in _require(c, "domains", f"color {name}"))
        except KeyError as exc:
            raise ModelError(f"color {name}: unknown domain {exc.args[0]!r}") from None
        attrs = tuple(c.get("attributes") or [f"a{j}" for j in range(len(doms))])
        colors[name] = Color(name, doms, attrs)

    places: dict[str, Place] = {}
    for i, p in enumerate(_require(data, "places", "model")):
        pid = str(_require(p, "id", f"places[{i}]"))
        if pid in places:
            raise ModelError(f"duplicate place id {pid!r}")
        cname = _require(p, "color", f"place {pid}")
        if cname not in colors:
            raise ModelError(f"place {pid}: unknown color {cname!r}")
        places[pid] = Place(pid, colors[cname], p.get("role", "internal"))

    transitions: dict[str, Transition] = {}
    for i, t in enumerate(_require(data, "transitions", "model")):
        tid = str(_require(t, "id", f"transitions[{i}]"))
        if tid in transitions:
            raise ModelError(f"duplicate transition id {tid!r}")
        rule = None
        if t.get("priority"):
            rule = PriorityRule({str(pid): local_rule_from_json(spec) for pid, spec in t["priority"].items()})
        transitions[tid] = Transition(tid, str(_require(t, "activity", f"transition {tid}")), rule)

    arcs = []
    for i, a in enumerate(_require(data, "arcs", "model")):
        src, dst = str(_require(a, "from", f"arcs[{i}]")), str(_require(a, "to", f"arcs[{i}]"))
        expr_text = _require(a, "expr", f"arc ({src},{dst})")
        try:
            expr = parse_expression(expr_text)
        except ModelError as exc:
            exc.args = (f"arc ({src},{dst}): {exc}",)
            raise
        arcs.append(Arc(src, dst, expr))

    marking = Marking()
    for pid, toks in (data.get("initial_marking") or {}).items():
        if pid not in places:
            raise ModelError(f"initial marking: unknown place {pid!r}")
        for tok in toks:
            try:
                marking.add(pid, places[pid].color.coerce(tok))
            except DomainError as exc:
                raise ModelError(f"initial marking of {pid}: {exc}") from None

    return CPN(domains, colors, places, transitions, tuple(arcs), marking, str(data.get("name", "net")))


def cpn_to_dict(cpn: CPN) -> dict[str, Any]:
    out: dict[str, Any] = {
        "name": cpn.name,
        "domains": [{"name": d.name, "kind": d.kind} for d in cpn.domains.values()],
        "colors": [
            {"name": c.name, "domains": [d.name for d in c.domains], "attributes": list(c.attributes)}
            for c in cpn.colors.values()
        ],
        "places": [{"id": p.id, "color": p.color.name, "role": p.role} for p in cpn.places.values()],
        "transitions": [],
        "arcs": [{"from": a.source, "to": a.target, "expr": str(a.expression)} for a in cpn.arcs],
    }
    for t in cpn.transitions.values():
        entry: dict[str, Any] = {"id": t.id, "activity": t.activity}
        if t.priority is not None and t.priority.local_rules:
            entry["priority"] = {pid: r.to_json() for pid, r in t.priority.local_rules.items()}
        out["transitions"].append(entry)
    if not cpn.initial_marking.is_empty():
        out["initial_marking"] = {p: [list(t) for t in toks] for p, toks in cpn.initial_marking.to_dict().items()}
    return out


def load_model(path) -> CPN:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ModelError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return cpn_from_dict(data)


def dumps_model(cpn: CPN) -> str:
    return json.dumps(cpn_to_dict(cpn), indent=2) + "\n"


def save_model(cpn: CPN, path) -> None:
    Path(path).write_text(dumps_model(cpn))


def model_hash(cpn: CPN) -> str:
    canonical = json.dumps(cpn_to_dict(cpn), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()
