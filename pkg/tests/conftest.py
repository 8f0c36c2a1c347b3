import os
import random

import pytest
from hypothesis import strategies as st

from phasecert.aiger_io import parse
from phasecert.fuzz import FuzzParams, random_circuit
from phasecert.netlist import Builder

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def fixture_text(name: str) -> str:
    with open(os.path.join(FIXTURES, name)) as fh:
        return fh.read()


@pytest.fixture
def two_phase():
    """Two latches: t copies the clock c, c toggles; bad = t and c."""
    return parse(fixture_text("two_phase.aag"))


def clock_circuit(bad_when_high=False):
    b = Builder()
    c = b.latch("c")
    b.set_next(c, c ^ 1)
    b.set_reset(c, 0)
    return b.build(c if bad_when_high else 0)


def circuits(max_latches=6, max_inputs=3, max_gates=12):
    """Hypothesis strategy over seeded random stratified circuits."""
    params = FuzzParams(max_inputs=max_inputs, max_latches=max_latches, max_gates=max_gates)
    return st.integers(0, 2**32 - 1).map(lambda s: random_circuit(random.Random(s), params))


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
