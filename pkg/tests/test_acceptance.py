"""Acceptance criteria, each run at its stated tolerance.

Every test reports one PASS/FAIL line through the ``acceptance`` fixture; the
lines are collected in the terminal summary.
"""

import random
import time
from collections import Counter

from cpnconf.diagnostics import aggregate, to_dot
from cpnconf.replay import DeviationKind as K, replay_log, replay_trace
from cpnconf.rules import BUILTIN_RULES, preceding_token
from cpnconf.trading import SimConfig, build_reference_model, simulate
from cpnconf.validation import validate_conservative_workflow, validate_syntax

from conftest import worked_trace
from helpers import fuzz_reference_log, parse_dot, phi_buy, phi_sell, random_cw_net, random_place
from test_net import _drop_output, _drop_sell_sink, _random_firing, _second_buy_input, mutated

# mean events per trace of the reference faulty log
TARGET_EVENTS = 44.97


def test_1_worked_example_replay(acceptance):
    start = time.perf_counter()
    net = build_reference_model()
    res = replay_trace(net, worked_trace())
    elapsed = time.perf_counter() - start
    got = [(d.kind, d.event_seq, d.object_id, tuple(d.detail.values())) for d in res.deviations]
    want = [
        (K.CONTROL_FLOW, 5, "s2", ("p2", "p4")),
        (K.RULE_VIOLATION, 6, "s1", ("p6", "s2")),
        (K.RESOURCE_CORRUPTED, 6, "b1", ("qty", 3, 4)),
        (K.NONPROPER_TERMINATION, None, "b1", ("p5", "p7")),
        (K.NONPROPER_TERMINATION, None, "s2", ("p6", "p8")),
    ]
    ok = got == want and (res.counters.j, res.counters.k) == (3, 10) and res.fitness == 1 - 3 / 10 and elapsed < 1.0
    acceptance("1 worked-example replay", ok, f"j={res.counters.j} k={res.counters.k} fitness={res.fitness:.2f} {elapsed:.3f}s")
    assert ok, got


def test_2_faithful_round_trip(acceptance):
    start = time.perf_counter()
    net = build_reference_model()
    log, _ = simulate(SimConfig.faithful(traces=100))
    out = replay_log(net, log)
    elapsed = time.perf_counter() - start
    n_dev = sum(len(r.deviations) for r in out.results)
    ok = len(out.results) == 100 and not out.skipped and n_dev == 0 and out.fitness == 1.0 and elapsed < 10
    acceptance("2 faithful round trip", ok, f"deviations={n_dev} fitness={out.fitness} {elapsed:.2f}s")
    assert ok


def test_3_faulty_book_reproduction(acceptance):
    start = time.perf_counter()
    net = build_reference_model()
    cfg = SimConfig()
    assert cfg.skip_submission_rate_buy == 0.5 and cfg.skip_submission_rate_sell > 0 and cfg.sell_deadlock_rate > 0
    log, _ = simulate(cfg)
    summary = aggregate(replay_log(net, log, jobs=2).results, net)
    elapsed = time.perf_counter() - start
    measure = summary.measure_for("new buy order")
    edges = {e for e, total in summary.edge_totals().items() if total > 0}
    _, _, dotted = parse_dot(to_dot(net, summary))
    per_trace = log.event_count / len(log)
    checks = {
        "measure": abs(measure - 0.5) <= 0.05,
        "edges": edges == {("p1", "p3"), ("p2", "p4"), ("p6", "p8")} and set(dotted) == edges,
        "events": abs(per_trace - TARGET_EVENTS) <= 0.1 * TARGET_EVENTS,
        "traces": len(log) == 100,
        "runtime": elapsed < 30,
    }
    ok = all(checks.values())
    acceptance(
        "3 faulty book reproduction",
        ok,
        f"new buy order={measure:.3f} edges={sorted(edges)} events/trace={per_trace:.2f} {elapsed:.2f}s",
    )
    assert ok, checks


def test_4_fault_bookkeeping(acceptance):
    net = build_reference_model()
    log, injected = simulate(SimConfig(rng_seed=2021))
    counts = Counter(d.kind for r in replay_log(net, log).results for d in r.deviations)
    # every non-deadlocked order either fills or is cancelled, so nothing else is left unfinished
    ok = counts[K.CONTROL_FLOW] == injected.skipped_submissions and counts[K.NONPROPER_TERMINATION] == injected.deadlocks
    acceptance(
        "4 fault bookkeeping",
        ok,
        f"CF={counts[K.CONTROL_FLOW]} skips={injected.skipped_submissions} "
        f"NT={counts[K.NONPROPER_TERMINATION]} deadlocks={injected.deadlocks}",
    )
    assert ok


def test_5a_identifier_conservation(acceptance):
    rng = random.Random(2021)
    sequences = steps = failures = 0
    while sequences < 1000:
        net = random_cw_net(rng)
        if not (validate_syntax(net).ok and validate_conservative_workflow(net).ok):
            failures += 1
            sequences += 1
            continue
        for before, after in _random_firing(net, rng, 20):
            steps += 1
            ids = after.identifiers()
            if sorted(before.identifiers()) != sorted(ids) or len(ids) != len(set(ids)):
                failures += 1
        sequences += 1
    ok = failures == 0
    acceptance("5a identifier conservation", ok, f"{sequences} sequences, {steps} firings, {failures} failures")
    assert ok


def test_5b_priority_oracle(acceptance):
    # submission times within a place are distinct, as in any real book
    rng = random.Random(5)
    attrs = ("id", "tsub", "price", "qty")
    mismatches = 0
    for _ in range(10_000):
        side = rng.choice(("buy", "sell"))
        tokens = random_place(rng, side, max_tokens=20)
        cand = rng.choice(tokens)
        rule, phi = (BUILTIN_RULES["price-time-buy"], phi_buy) if side == "buy" else (BUILTIN_RULES["price-time-sell"], phi_sell)
        if (preceding_token(rule, attrs, tokens, cand) is not None) != (not phi(tokens, cand)):
            mismatches += 1
    ok = mismatches == 0
    acceptance("5b priority comparator vs disjunction oracle", ok, f"10000 places, {mismatches} mismatches")
    assert ok


def test_5c_replay_determinism(acceptance):
    net = build_reference_model()
    log = fuzz_reference_log(99, traces=50)
    first = replay_log(net, log).results
    again = [replay_log(net, log).results, replay_log(net, log, jobs=3).results]
    ok = all(run == first for run in again)
    acceptance("5c replay determinism", ok, "3 runs, serial and parallel")
    assert ok


def test_5d_fitness_bounds(acceptance):
    net = build_reference_model()
    values = []
    for seed in range(20):
        out = replay_log(net, fuzz_reference_log(seed, traces=25), skip_invalid=False)
        values.extend(r.fitness for r in out.results)
        values.append(out.fitness)
    ok = all(0.0 <= v <= 1.0 for v in values)
    acceptance("5d fitness in [0,1]", ok, f"{len(values)} values, min={min(values):.3f}")
    assert ok


def test_5e_mutant_nets(acceptance):
    def dup_ids(d):
        d["initial_marking"] = {"p1": [["b1", 1, 22.0, 5]], "p3": [["b1", 2, 21.0, 1]]}

    mutants = {"cw1": _drop_output, "cw2": dup_ids, "cw3": _drop_sell_sink, "cw4": _second_buy_input}
    caught = {}
    for code, fn in mutants.items():
        caught[code] = code in validate_conservative_workflow(mutated(fn)).codes()
    ok = all(caught.values())
    acceptance("5e validator rejects mutants", ok, " ".join(f"{c}={'rejected' if v else 'ACCEPTED'}" for c, v in caught.items()))
    assert ok
