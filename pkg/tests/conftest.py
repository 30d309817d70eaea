from decimal import Decimal

import pytest

from resmatch.audit import prop1_market
from resmatch.model import GC, HorizontalType, Individual, Institution, Market


def scores(**kw):
    return {k: Decimal(v) for k, v in kw.items()}


def single_institution(individuals, capacity, reserved=None, score_map=None, types=(), reservations=None):
    """A one-institution market named ``s``."""
    inst = Institution("s", capacity, dict(reserved or {}), score_map or {})
    return Market(
        tuple(individuals),
        (inst,),
        tuple(HorizontalType(h) for h in types),
        dict(reservations or {}),
    )


@pytest.fixture
def prop1():
    return prop1_market()


@pytest.fixture
def prop1_cop_market():
    """Both individuals rank the SC seat above the open seat."""
    prefs = (("s", "SC"), ("s", GC))
    return Market(
        (Individual("i", "SC", "SC", frozenset(), prefs), Individual("j", "SC", "SC", frozenset(), prefs)),
        (Institution("s", 2, {"SC": 1}, scores(i=90, j=80)),),
    )


# One line per acceptance criterion, printed at the end of the run.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
