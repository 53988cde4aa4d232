import random

import pytest
from hypothesis import given, settings, strategies as st

from cpnconf.errors import ConfigurationError
from cpnconf.rules import BUILTIN_RULES, LocalRule, PriorityRule, check_priority, local_rule_from_json, preceding_token

from helpers import phi_buy, phi_sell, random_place

ATTRS = ("id", "tsub", "price", "qty")
BUY = BUILTIN_RULES["price-time-buy"]
SELL = BUILTIN_RULES["price-time-sell"]


def violates(rule, tokens, candidate):
    return preceding_token(rule, ATTRS, tokens, candidate) is not None


def test_sell_rule_flags_cheaper_resting_order():
    p6 = [("s1", 2, 21.0, 2), ("s2", 3, 19.0, 1)]
    assert violates(SELL, p6, p6[0])
    assert preceding_token(SELL, ATTRS, p6, p6[0])[0] == "s2"
    assert not violates(SELL, p6, p6[1])


def test_singleton_place_never_violates():
    tok = ("b1", 1, 22.0, 5)
    assert not violates(BUY, [tok], tok)
    assert not violates(SELL, [tok], tok)


def test_equal_price_earlier_submission_has_priority():
    p5 = [("b1", 5, 10.0, 1), ("b2", 2, 10.0, 1)]
    assert violates(BUY, p5, p5[0])
    assert not violates(BUY, p5, p5[1])


def test_buy_prefers_higher_price():
    p5 = [("b1", 1, 10.0, 1), ("b2", 9, 10.5, 1)]
    assert violates(BUY, p5, p5[0])
    assert not violates(BUY, p5, p5[1])


def test_full_ties_are_not_violations():
    p5 = [("b1", 3, 10.0, 1), ("b2", 3, 10.0, 7)]
    assert not violates(BUY, p5, p5[0])
    assert not violates(BUY, p5, p5[1])


def test_preceding_token_is_the_best_one():
    p6 = [("s1", 5, 12.0, 1), ("s2", 4, 11.0, 1), ("s3", 1, 10.0, 1), ("s4", 2, 10.0, 1)]
    assert preceding_token(SELL, ATTRS, p6, p6[0])[0] == "s3"


def test_unknown_attribute_is_configuration_error():
    rule = LocalRule((("volume", "desc"),))
    with pytest.raises(ConfigurationError, match="volume"):
        rule.precedes(("a", 1), ("b", 2), ATTRS)


def test_bad_direction_rejected():
    with pytest.raises(ConfigurationError):
        LocalRule((("price", "up"),))


def test_rule_json_forms():
    assert local_rule_from_json("price-time-buy") is BUY
    inline = local_rule_from_json([["qty", "asc"]])
    assert inline.keys == (("qty", "asc"),)
    with pytest.raises(ConfigurationError):
        local_rule_from_json("fifo")
    assert BUY.to_json() == "price-time-buy"
    assert inline.to_json() == [["qty", "asc"]]


def test_check_priority_without_rule(ref):
    place = ref.places["p1"]
    assert not check_priority(None, place, [("b1", 1, 1.0, 1), ("b2", 0, 2.0, 1)], ("b1", 1, 1.0, 1))
    assert not check_priority(PriorityRule({"p6": SELL}), ref.places["p5"], [], ("b1", 1, 1.0, 1))


def test_oracle_agreement_random_places():
    rng = random.Random(11)
    for _ in range(2000):
        side = rng.choice(["buy", "sell"])
        tokens = random_place(rng, side)
        cand = rng.choice(tokens)
        rule, phi = (BUY, phi_buy) if side == "buy" else (SELL, phi_sell)
        assert violates(rule, tokens, cand) == (not phi(tokens, cand))


def test_full_ties_differ_from_literal_disjunction():
    # the literal disjunction counts an exact price/time tie as a violation; the comparator does not
    p5 = [("b1", 3, 10.0, 1), ("b2", 3, 10.0, 1)]
    assert not phi_buy(p5, p5[0])
    assert not violates(BUY, p5, p5[0])


tokens_st = st.lists(
    st.tuples(st.integers(0, 6), st.sampled_from([1.0, 1.5, 2.0, 2.5])), min_size=1, max_size=12
).map(lambda xs: [(f"o{i}", ts, pr, 1) for i, (ts, pr) in enumerate(xs)])


@settings(max_examples=200, deadline=None)
@given(tokens_st, st.sampled_from([BUY, SELL]))
def test_exactly_the_maximal_tokens_are_free(tokens, rule):
    """A token violates iff some other token is strictly better; the best tokens never violate."""
    free = [t for t in tokens if not violates(rule, tokens, t)]
    assert free
    for f in free:
        assert not any(rule.precedes(o, f, ATTRS) for o in tokens)
    for t in tokens:
        if t not in free:
            assert rule.precedes(preceding_token(rule, ATTRS, tokens, t), t, ATTRS)


@settings(max_examples=200, deadline=None)
@given(tokens_st, st.sampled_from([BUY, SELL]))
def test_precedence_is_a_strict_order(tokens, rule):
    for a in tokens:
        assert not rule.precedes(a, a, ATTRS)
        for b in tokens:
            if rule.precedes(a, b, ATTRS):
                assert not rule.precedes(b, a, ATTRS)
                for c in tokens:
                    if rule.precedes(b, c, ATTRS):
                        assert rule.precedes(a, c, ATTRS)
