"""Test-side generators and brute-force oracles, independent of the code under test."""

import random
import re

from cpnconf.eventlog import EventLog, EventRecord, ObjectState, Trace
from cpnconf.modelfile import cpn_from_dict

REFERENCE_INPUTS = {
    "submit buy order": ["OB"],
    "submit sell order": ["OS"],
    "new buy order": ["OB"],
    "new sell order": ["OS"],
    "trade1": ["OB", "OS"],
    "trade2": ["OB", "OS"],
    "trade3": ["OB", "OS"],
    "cancel buy order": ["OB"],
    "cancel sell order": ["OS"],
}


def phi_buy(place_tokens, r1):
    """Local rule on the buy side, written exactly as the disjunction over all other tokens."""
    for (o, ts, pr, q) in place_tokens:
        if o == r1[0]:
            continue
        if not (r1[2] > pr or (r1[2] == pr and r1[1] < ts)):
            return False
    return True


def phi_sell(place_tokens, r2):
    for (o, ts, pr, q) in place_tokens:
        if o == r2[0]:
            continue
        if not (r2[2] < pr or (r2[2] == pr and r2[1] < ts)):
            return False
    return True


def random_place(rng, side, max_tokens=20, distinct_tsub=True):
    n = rng.randint(1, max_tokens)
    tsubs = rng.sample(range(1, 4 * max_tokens), n) if distinct_tsub else [rng.randint(1, 5) for _ in range(n)]
    prices = [rng.choice([9.5, 10.0, 10.5, 11.0, 11.5]) for _ in range(n)]
    prefix = "b" if side == "buy" else "s"
    return [(f"{prefix}{i}", tsubs[i], prices[i], rng.randint(0, 9)) for i in range(n)]


def random_cw_net(rng):
    """A random conservative-workflow net: per color a chain source -> ... -> sink,
    plus synchronising transitions joining one step of several colors."""
    n_colors = rng.randint(1, 3)
    domains = [{"name": "N", "kind": "natural"}] + [{"name": f"I{c}", "kind": "identifier"} for c in range(n_colors)]
    colors, places, transitions, arcs = [], [], [], []
    chains = []
    for c in range(n_colors):
        colors.append({"name": f"C{c}", "domains": [f"I{c}", "N"], "attributes": ["id", "v"]})
        length = rng.randint(2, 5)
        chain = [f"c{c}p{i}" for i in range(length)]
        chains.append(chain)
        for i, pid in enumerate(chain):
            role = "source" if i == 0 else "sink" if i == length - 1 else "internal"
            places.append({"id": pid, "color": f"C{c}", "role": role})
    tcount = 0

    def out_expr(var, val):
        return rng.choice([f"({var},{val})", f"({var},{val}+1)", f"({var},{val}*2)", f"({var},3)"])

    for c, chain in enumerate(chains):
        for i in range(len(chain) - 1):
            tid = f"t{tcount}"
            tcount += 1
            transitions.append({"id": tid, "activity": f"act{tid}"})
            arcs.append({"from": chain[i], "to": tid, "expr": f"(x{c},v{c})"})
            arcs.append({"from": tid, "to": chain[i + 1], "expr": out_expr(f"x{c}", f"v{c}")})
        # occasional back edge, still monochrome
        if len(chain) > 2 and rng.random() < 0.5:
            tid = f"t{tcount}"
            tcount += 1
            transitions.append({"id": tid, "activity": f"act{tid}"})
            arcs.append({"from": chain[-2], "to": tid, "expr": f"(x{c},v{c})"})
            arcs.append({"from": tid, "to": chain[1], "expr": out_expr(f"x{c}", f"v{c}")})
    for _ in range(rng.randint(0, 3)):
        if n_colors < 2:
            break
        members = rng.sample(range(n_colors), rng.randint(2, n_colors))
        tid = f"t{tcount}"
        tcount += 1
        transitions.append({"id": tid, "activity": f"act{tid}"})
        for c in members:
            chain = chains[c]
            i = rng.randrange(len(chain) - 1)
            arcs.append({"from": chain[i], "to": tid, "expr": f"(x{c},v{c})"})
            other = rng.choice([m for m in members if m != c])
            arcs.append({"from": tid, "to": chain[i + 1], "expr": rng.choice([f"(x{c},v{c}+v{other})", f"(x{c},v{c})"])})
    model = {"name": "random", "domains": domains, "colors": colors, "places": places,
             "transitions": transitions, "arcs": arcs}
    marking = {}
    for c, chain in enumerate(chains):
        n_tok = rng.randint(1, 4)
        for k in range(n_tok):
            pid = rng.choice(chain)
            marking.setdefault(pid, []).append([f"o{c}_{k}", rng.randint(0, 5)])
    model["initial_marking"] = marking
    return cpn_from_dict(model)


def fuzz_reference_trace(rng, trace_id, max_events=25):
    """A syntactically correct but otherwise arbitrary trace for the reference model."""
    buys = [f"b{i}" for i in range(rng.randint(1, 5))]
    sells = [f"s{i}" for i in range(rng.randint(1, 5))]
    state = {}
    for oid in buys + sells:
        state[oid] = [oid, rng.randint(0, 20), rng.choice([1.0, 2.5, 3.0, 4.0]), rng.randint(0, 6)]
    events = []
    for seq in range(1, rng.randint(1, max_events) + 1):
        activity = rng.choice(sorted(REFERENCE_INPUTS))
        objs = []
        for color in REFERENCE_INPUTS[activity]:
            oid = rng.choice(buys if color == "OB" else sells)
            if rng.random() < 0.4:
                state[oid][3] = rng.randint(0, 6)
            if rng.random() < 0.1:
                state[oid][2] = rng.choice([1.0, 2.5, 3.0, 4.0])
            objs.append(ObjectState(color, tuple(state[oid])))
        events.append(EventRecord(activity, tuple(objs), seq))
    return Trace(trace_id, tuple(events))


def fuzz_reference_log(seed, traces=20):
    rng = random.Random(seed)
    return EventLog([fuzz_reference_trace(rng, f"f{i}") for i in range(traces)])


_NODE = re.compile(r'^\s*"([^"]+)"\s*\[(.*)\];\s*$')
_EDGE = re.compile(r'^\s*"([^"]+)"\s*->\s*"([^"]+)"\s*\[(.*)\];\s*$')


def parse_dot(text):
    """Tiny DOT reader for the subset the exporter writes: nodes, solid and dotted edges."""
    nodes, solid, dotted = set(), set(), {}
    for line in text.splitlines():
        m = _EDGE.match(line)
        if m:
            src, dst, attrs = m.groups()
            if "style=dotted" in attrs:
                label = re.search(r'label="([^"]*)"', attrs).group(1)
                dotted[(src, dst)] = label
            else:
                solid.add((src, dst))
            continue
        m = _NODE.match(line)
        if m:
            nodes.add(m.group(1))
    return nodes, solid, dotted
