"""Reference order-book net and a price-time matching engine that emits event logs.

The engine runs one order book per trace.  Fault knobs let it misbehave the
way a faulty trading system would: orders skipping submission, sell orders
stuck after entering the book, corrupted attributes in trade events, and
matches that ignore price-time priority.  Every injected fault is counted in
:class:`InjectionReport` so tests can reconcile detections with injections.
"""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass, field, fields
from datetime import datetime, timedelta
from typing import Optional

from .eventlog import EventLog, EventRecord, ObjectState, Trace
from .modelfile import cpn_from_dict
from .net import CPN

BUY, SELL = "OB", "OS"

SUBMIT_BUY = "submit buy order"
SUBMIT_SELL = "submit sell order"
NEW_BUY = "new buy order"
NEW_SELL = "new sell order"
TRADE1, TRADE2, TRADE3 = "trade1", "trade2", "trade3"
CANCEL_BUY = "cancel buy order"
CANCEL_SELL = "cancel sell order"

_BUY_IN = "(b,ts1,pr1,q1)"
_SELL_IN = "(s,ts2,pr2,q2)"
_TRADES = {"p5": "price-time-buy", "p6": "price-time-sell"}

REFERENCE_MODEL = {
    "name": "order-book",
    "domains": [
        {"name": "O_B", "kind": "identifier"},
        {"name": "O_S", "kind": "identifier"},
        {"name": "N", "kind": "natural"},
        {"name": "R+", "kind": "positive-real"},
    ],
    "colors": [
        {"name": BUY, "domains": ["O_B", "N", "R+", "N"], "attributes": ["id", "tsub", "price", "qty"]},
        {"name": SELL, "domains": ["O_S", "N", "R+", "N"], "attributes": ["id", "tsub", "price", "qty"]},
    ],
    "places": [
        {"id": "p1", "color": BUY, "role": "source"},
        {"id": "p2", "color": SELL, "role": "source"},
        {"id": "p3", "color": BUY, "role": "internal"},
        {"id": "p4", "color": SELL, "role": "internal"},
        {"id": "p5", "color": BUY, "role": "internal"},
        {"id": "p6", "color": SELL, "role": "internal"},
        {"id": "p7", "color": BUY, "role": "sink"},
        {"id": "p8", "color": SELL, "role": "sink"},
    ],
    "transitions": [
        {"id": "t1", "activity": SUBMIT_BUY},
        {"id": "t2", "activity": SUBMIT_SELL},
        {"id": "t3", "activity": NEW_BUY},
        {"id": "t4", "activity": NEW_SELL},
        {"id": "t5", "activity": TRADE1, "priority": _TRADES},
        {"id": "t6", "activity": TRADE2, "priority": _TRADES},
        {"id": "t7", "activity": TRADE3, "priority": _TRADES},
        {"id": "t8", "activity": CANCEL_BUY},
        {"id": "t9", "activity": CANCEL_SELL},
    ],
    "arcs": [
        {"from": "p1", "to": "t1", "expr": "(b,ts,pr,q)"},
        {"from": "t1", "to": "p3", "expr": "(b,ts,pr,q)"},
        {"from": "p2", "to": "t2", "expr": "(s,ts,pr,q)"},
        {"from": "t2", "to": "p4", "expr": "(s,ts,pr,q)"},
        {"from": "p3", "to": "t3", "expr": "(b,ts,pr,q)"},
        {"from": "t3", "to": "p5", "expr": "(b,ts,pr,q)"},
        {"from": "p4", "to": "t4", "expr": "(s,ts,pr,q)"},
        {"from": "t4", "to": "p6", "expr": "(s,ts,pr,q)"},
        # trade1: both orders filled
        {"from": "p5", "to": "t5", "expr": _BUY_IN},
        {"from": "p6", "to": "t5", "expr": _SELL_IN},
        {"from": "t5", "to": "p7", "expr": "(b,ts1,pr1,0)"},
        {"from": "t5", "to": "p8", "expr": "(s,ts2,pr2,0)"},
        # trade2: sell filled, buy returns to the book
        {"from": "p5", "to": "t6", "expr": _BUY_IN},
        {"from": "p6", "to": "t6", "expr": _SELL_IN},
        {"from": "t6", "to": "p5", "expr": "(b,ts1,pr1,q1-q2)"},
        {"from": "t6", "to": "p8", "expr": "(s,ts2,pr2,0)"},
        # trade3: buy filled, sell returns to the book
        {"from": "p5", "to": "t7", "expr": _BUY_IN},
        {"from": "p6", "to": "t7", "expr": _SELL_IN},
        {"from": "t7", "to": "p7", "expr": "(b,ts1,pr1,0)"},
        {"from": "t7", "to": "p6", "expr": "(s,ts2,pr2,q2-q1)"},
        {"from": "p5", "to": "t8", "expr": "(b,ts,pr,q)"},
        {"from": "t8", "to": "p7", "expr": "(b,ts,pr,q)"},
        {"from": "p6", "to": "t9", "expr": "(s,ts,pr,q)"},
        {"from": "t9", "to": "p8", "expr": "(s,ts,pr,q)"},
    ],
}


def build_reference_model() -> CPN:
    """The order-book net: places p1..p8, transitions t1..t9."""
    return cpn_from_dict(REFERENCE_MODEL)


@dataclass
class SimConfig:
    """Generator settings. Defaults reproduce the faulty-system experiment."""

    traces: int = 100
    buy_orders_per_trace: int = 10
    sell_orders_per_trace: int = 10
    # per-trace order counts vary uniformly by +/- this much around the means
    order_count_jitter: int = 0
    price_range: tuple[float, float] = (95.0, 105.0)
    price_tick: float = 0.5
    qty_range: tuple[int, int] = (1, 10)
    rng_seed: int = 2021
    skip_submission_rate_buy: float = 0.5
    skip_submission_rate_sell: float = 0.5
    sell_deadlock_rate: float = 0.3
    corruption_rate: float = 0.0
    rule_violation_rate: float = 0.0
    start_time: str = "2021-03-01T10:00:00"

    def validate(self) -> None:
        for f in fields(self):
            if "_rate" in f.name:
                v = getattr(self, f.name)
                if not 0.0 <= v <= 1.0:
                    raise ValueError(f"{f.name} must lie in [0, 1], got {v}")
        for name in ("traces", "buy_orders_per_trace", "sell_orders_per_trace", "order_count_jitter"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        lo, hi = self.price_range
        if not 0 < lo <= hi:
            raise ValueError("price_range must satisfy 0 < low <= high")
        if self.price_tick <= 0:
            raise ValueError("price_tick must be positive")
        qlo, qhi = self.qty_range
        if not 1 <= qlo <= qhi:
            raise ValueError("qty_range must satisfy 1 <= low <= high")
        datetime.fromisoformat(self.start_time)

    @classmethod
    def faithful(cls, **overrides) -> "SimConfig":
        base = dict(
            skip_submission_rate_buy=0.0,
            skip_submission_rate_sell=0.0,
            sell_deadlock_rate=0.0,
            corruption_rate=0.0,
            rule_violation_rate=0.0,
        )
        base.update(overrides)
        return cls(**base)

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        data = dict(data)
        # shorthand for both sides; per-side keys still win
        if "skip_submission_rate" in data:
            both = data.pop("skip_submission_rate")
            data.setdefault("skip_submission_rate_buy", both)
            data.setdefault("skip_submission_rate_sell", both)
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        for key in ("price_range", "qty_range"):
            if key in data:
                data[key] = tuple(data[key])
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        d = asdict(self)
        d["price_range"] = list(self.price_range)
        d["qty_range"] = list(self.qty_range)
        return d


@dataclass
class InjectionReport:
    """What the generator did wrong on purpose, by kind."""

    skipped_submissions: int = 0
    deadlocks: int = 0
    corruptions: int = 0
    priority_breaches: int = 0
    orders: int = 0
    # trace id -> list of order ids per fault kind, for pinpoint checks
    per_trace: dict = field(default_factory=dict)

    def note(self, trace_id: str, kind: str, order_id: str) -> None:
        self.per_trace.setdefault(trace_id, {}).setdefault(kind, []).append(order_id)


@dataclass
class _Order:
    id: str
    side: str
    tsub: int
    price: float
    qty: int
    stuck: bool = False

    def state(self) -> ObjectState:
        return ObjectState(self.side, (self.id, self.tsub, self.price, self.qty))

    def rank(self):
        return (-self.price if self.side == BUY else self.price, self.tsub)


class _Book:
    def __init__(self, trace_id: str, rng: random.Random, cfg: SimConfig, report: InjectionReport):
        self.trace_id = trace_id
        self.rng = rng
        self.cfg = cfg
        self.report = report
        self.resting: dict[str, list[_Order]] = {BUY: [], SELL: []}
        self.stuck: list[_Order] = []
        self.events: list[EventRecord] = []
        self.clock = datetime.fromisoformat(cfg.start_time)

    def emit(self, activity: str, *objs: ObjectState) -> None:
        self.clock += timedelta(milliseconds=self.rng.randint(1, 2000))
        self.events.append(EventRecord(activity, objs, len(self.events) + 1, self.clock.isoformat(timespec="milliseconds")))

    def arrive(self, order: _Order) -> None:
        cfg = self.cfg
        skip_rate = cfg.skip_submission_rate_buy if order.side == BUY else cfg.skip_submission_rate_sell
        if self.rng.random() < skip_rate:
            self.report.skipped_submissions += 1
            self.report.note(self.trace_id, "skip", order.id)
        else:
            self.emit(SUBMIT_BUY if order.side == BUY else SUBMIT_SELL, order.state())
        self.emit(NEW_BUY if order.side == BUY else NEW_SELL, order.state())
        if order.side == SELL and self.rng.random() < cfg.sell_deadlock_rate:
            order.stuck = True
            self.stuck.append(order)
            self.report.deadlocks += 1
            self.report.note(self.trace_id, "deadlock", order.id)
            return
        self.resting[order.side].append(order)
        self.match()

    def _pick(self, side: str) -> _Order:
        book = sorted(self.resting[side], key=_Order.rank)
        return book[0]

    def match(self) -> None:
        while self.resting[BUY] and self.resting[SELL]:
            buy, sell = self._pick(BUY), self._pick(SELL)
            if buy.price < sell.price:
                return
            if self.cfg.rule_violation_rate and self.rng.random() < self.cfg.rule_violation_rate:
                buy, sell = self._breach(buy, sell)
            self.trade(buy, sell)

    def _breach(self, buy: _Order, sell: _Order):
        """Swap one side for a worse order that still crosses, if there is one."""
        options = []
        for side, best, other in ((BUY, buy, sell), (SELL, sell, buy)):
            for o in self.resting[side]:
                if o is best or o.rank() == best.rank():
                    continue
                crosses = o.price >= other.price if side == BUY else o.price <= other.price
                if crosses:
                    options.append((side, o))
        if not options:
            return buy, sell
        side, worse = self.rng.choice(sorted(options, key=lambda so: (so[0], so[1].tsub)))
        self.report.priority_breaches += 1
        self.report.note(self.trace_id, "breach", worse.id)
        return (worse, sell) if side == BUY else (buy, worse)

    def trade(self, buy: _Order, sell: _Order) -> None:
        fill = min(buy.qty, sell.qty)
        if buy.qty == sell.qty:
            activity = TRADE1
        elif buy.qty > sell.qty:
            activity = TRADE2
        else:
            activity = TRADE3
        buy.qty -= fill
        sell.qty -= fill
        for o in (buy, sell):
            if o.qty == 0:
                self.resting[o.side].remove(o)
        states = [buy.state(), sell.state()]
        if self.cfg.corruption_rate and self.rng.random() < self.cfg.corruption_rate:
            i = self.rng.randrange(2)
            states[i] = self._corrupt(states[i])
            # the altered price sticks to the order, so later events agree with it
            (buy, sell)[i].price = states[i].values[2]
            self.report.corruptions += 1
            self.report.note(self.trace_id, "corrupt", states[i].id)
        self.emit(activity, *states)

    def _corrupt(self, obj: ObjectState) -> ObjectState:
        # price only: trades never change prices, so the model's later arithmetic stays defined
        oid, tsub, price, qty = obj.values
        grid = _price_grid(self.cfg)
        alternatives = [p for p in grid if p != price] or [price + self.cfg.price_tick]
        return ObjectState(obj.color, (oid, tsub, self.rng.choice(alternatives), qty))

    def close(self) -> None:
        live = sorted(self.resting[BUY] + self.resting[SELL], key=lambda o: o.tsub)
        for o in live:
            self.emit(CANCEL_BUY if o.side == BUY else CANCEL_SELL, o.state())
        self.resting = {BUY: [], SELL: []}


def _price_grid(cfg: SimConfig) -> list[float]:
    lo, hi = cfg.price_range
    n = int(round((hi - lo) / cfg.price_tick))
    return [round(lo + i * cfg.price_tick, 10) for i in range(n + 1)]


def _trace_rng(seed: int, index: int) -> random.Random:
    return random.Random(f"cpnconf:{seed}:{index}")


def simulate_trace(cfg: SimConfig, index: int, report: Optional[InjectionReport] = None) -> Optional[Trace]:
    report = report if report is not None else InjectionReport()
    rng = _trace_rng(cfg.rng_seed, index)
    trace_id = f"book{index + 1:03d}"
    jitter = cfg.order_count_jitter
    n_buy = max(0, cfg.buy_orders_per_trace + (rng.randint(-jitter, jitter) if jitter else 0))
    n_sell = max(0, cfg.sell_orders_per_trace + (rng.randint(-jitter, jitter) if jitter else 0))
    sides = [BUY] * n_buy + [SELL] * n_sell
    rng.shuffle(sides)
    grid = _price_grid(cfg)
    book = _Book(trace_id, rng, cfg, report)
    counters = {BUY: 0, SELL: 0}
    for tsub, side in enumerate(sides, start=1):
        counters[side] += 1
        oid = f"{'b' if side == BUY else 's'}{counters[side]}"
        order = _Order(oid, side, tsub, rng.choice(grid), rng.randint(*cfg.qty_range))
        report.orders += 1
        book.arrive(order)
    book.close()
    if not book.events:
        return None
    return Trace(trace_id, tuple(book.events))


def simulate(cfg: SimConfig) -> tuple[EventLog, InjectionReport]:
    """Generate a log and the bookkeeping of every injected fault."""
    cfg.validate()
    report = InjectionReport()
    traces = []
    for i in range(cfg.traces):
        trace = simulate_trace(cfg, i, report)
        if trace is not None:
            traces.append(trace)
    meta = {"generator": "cpnconf", "seed": cfg.rng_seed, "config": cfg.to_dict()}
    return EventLog(traces, meta), report


def generate_log(cfg: SimConfig) -> EventLog:
    return simulate(cfg)[0]


def load_config(path) -> SimConfig:
    with open(path) as fh:
        return SimConfig.from_dict(json.load(fh))
