from __future__ import annotations

from fractions import Fraction

import pytest

from sl21.repmod import Weight, typical_module
from sl21.scalar import Context

MU = Weight(Fraction(1, 5), Fraction(1, 7))
NU = Weight(Fraction(2, 7), Fraction(-3, 11))
RHO = Weight(Fraction(3, 5), Fraction(1, 11))


@pytest.fixture(scope="session")
def ctx() -> Context:
    """High-precision default context at ell = 3."""
    return Context(3)


@pytest.fixture(scope="session")
def fast() -> Context:
    """Double-precision context at ell = 3."""
    return Context.fast(3)


@pytest.fixture(scope="session")
def fast5() -> Context:
    return Context.fast(5)


@pytest.fixture(scope="session")
def V(fast):
    return typical_module(fast, MU)


@pytest.fixture(scope="session")
def W(fast):
    return typical_module(fast, NU)


@pytest.fixture(scope="session")
def X(fast):
    return typical_module(fast, RHO)


# one line per acceptance criterion, shown in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
