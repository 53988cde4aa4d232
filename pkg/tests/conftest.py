import pytest

from cpnconf.eventlog import EventRecord, ObjectState, Trace
from cpnconf.trading import build_reference_model

ACCEPTANCE_LINES = []


def obj(*values):
    color = "OB" if values[0].startswith("b") else "OS"
    return ObjectState(color, values)


def event(seq, activity, *objects, ts=None):
    return EventRecord(activity, tuple(obj(*o) for o in objects), seq, ts)


def worked_trace(e6_buy_qty=4, e6_sell_qty=0):
    return Trace(
        "worked",
        (
            event(1, "submit buy order", ("b1", 1, 22.0, 5), ts="09:00:01"),
            event(2, "new buy order", ("b1", 1, 22.0, 5), ts="09:00:02"),
            event(3, "submit sell order", ("s1", 2, 21.0, 2), ts="09:00:03"),
            event(4, "new sell order", ("s1", 2, 21.0, 2), ts="09:00:04"),
            event(5, "new sell order", ("s2", 3, 19.0, 1), ts="09:00:05"),
            event(6, "trade2", ("b1", 1, 22.0, e6_buy_qty), ("s1", 2, 21.0, e6_sell_qty), ts="09:00:06"),
        ),
    )


@pytest.fixture(scope="session")
def ref():
    return build_reference_model()


@pytest.fixture
def worked():
    return worked_trace()


@pytest.fixture
def acceptance():
    def record(criterion, ok, detail=""):
        ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {criterion}" + (f"  [{detail}]" if detail else ""))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
