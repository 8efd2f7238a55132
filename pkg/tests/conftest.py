import pytest

from lsxva.curves import PartyCredit
from lsxva.instruments import Instrument, MarketEnv

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def market():
    return MarketEnv.flat(spot=50.0, vol=0.5, rate=0.05, borrow_spread=0.005)


@pytest.fixture(scope="session")
def dealer():
    return PartyCredit.flat(0.005, 0.002)


@pytest.fixture(scope="session")
def counterparty():
    return PartyCredit.flat(0.03, 0.005)


@pytest.fixture(scope="session")
def shifted_forward():
    return Instrument.shifted_forward(45.0, 55.0, 1.0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
