"""Priority rules: per-place local rules expressed as lexicographic comparators."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .errors import ConfigurationError

ASC = "asc"
DESC = "desc"


@dataclass(frozen=True)
class LocalRule:
    """Strict-priority predicate on one place.

    ``keys`` is an ordered list of ``(attribute, direction)``; a token strictly
    precedes another when it wins on the first attribute where they differ.
    Tokens equal on every key are tied and neither precedes the other.
    """

    keys: tuple[tuple[str, str], ...]
    name: str = ""

    def __post_init__(self):
        if not self.keys:
            raise ConfigurationError("a local rule needs at least one key")
        for attr, direction in self.keys:
            if direction not in (ASC, DESC):
                raise ConfigurationError(f"direction for {attr!r} must be 'asc' or 'desc', got {direction!r}")

    def resolve(self, attributes: Sequence[str]) -> list[tuple[int, str]]:
        out = []
        for attr, direction in self.keys:
            if attr not in attributes:
                raise ConfigurationError(
                    f"rule {self.label()} uses attribute {attr!r}, not among {list(attributes)}"
                )
            out.append((list(attributes).index(attr), direction))
        return out

    def precedes(self, a: tuple, b: tuple, attributes: Sequence[str]) -> bool:
        """True iff token ``a`` strictly precedes token ``b``."""
        return _precedes(self.resolve(attributes), a, b)

    def label(self) -> str:
        return self.name or ",".join(f"{a}:{d}" for a, d in self.keys)

    def to_json(self):
        if self.name in BUILTIN_RULES and BUILTIN_RULES[self.name] == self:
            return self.name
        return [list(k) for k in self.keys]


def _precedes(resolved: list[tuple[int, str]], a: tuple, b: tuple) -> bool:
    for idx, direction in resolved:
        x, y = a[idx], b[idx]
        if x == y:
            continue
        return x > y if direction == DESC else x < y
    return False


BUILTIN_RULES: dict[str, LocalRule] = {
    "price-time-buy": LocalRule(((("price", DESC), ("tsub", ASC))), name="price-time-buy"),
    "price-time-sell": LocalRule(((("price", ASC), ("tsub", ASC))), name="price-time-sell"),
}


def local_rule_from_json(spec) -> LocalRule:
    if isinstance(spec, str):
        try:
            return BUILTIN_RULES[spec]
        except KeyError:
            raise ConfigurationError(f"unknown built-in rule {spec!r}; known: {sorted(BUILTIN_RULES)}") from None
    try:
        keys = tuple((str(a), str(d)) for a, d in spec)
    except (TypeError, ValueError):
        raise ConfigurationError(f"inline rule must be a list of [attribute, direction] pairs, got {spec!r}") from None
    return LocalRule(keys)


@dataclass(frozen=True)
class PriorityRule:
    """Conjunction of local rules over some input places of one transition."""

    local_rules: Mapping[str, LocalRule] = field(default_factory=dict)

    def __hash__(self):
        return hash(tuple(sorted(self.local_rules.items(), key=lambda kv: kv[0])))

    def for_place(self, place_id: str) -> Optional[LocalRule]:
        return self.local_rules.get(place_id)


def preceding_token(rule: LocalRule, attributes: Sequence[str], tokens: Iterable[tuple], candidate: tuple):
    """Return the highest-priority token that strictly precedes ``candidate``, or None.

    Tokens sharing the candidate's identifier are ignored.
    """
    resolved = rule.resolve(attributes)
    best = None
    for tok in tokens:
        if tok[0] == candidate[0] or not _precedes(resolved, tok, candidate):
            continue
        if best is None or _precedes(resolved, tok, best) or (
            not _precedes(resolved, best, tok) and str(tok[0]) < str(best[0])
        ):
            best = tok
    return best


def check_priority(rule: Optional[PriorityRule], place, place_marking: Iterable[tuple], candidate: tuple) -> bool:
    """True when consuming ``candidate`` from ``place`` violates the transition's rule.

    Returns False when the rule is absent or has no local rule for ``place``.
    """
    if rule is None:
        return False
    local = rule.for_place(place.id)
    if local is None:
        return False
    return preceding_token(local, place.color.attributes, place_marking, candidate) is not None
