from pathlib import Path

import pytest

from fivefactor.panel import apply_filters, load_panel

FIXTURE = Path(__file__).parent / "data" / "fixture"


def fixture_paths(directory=FIXTURE):
    return tuple(str(directory / name) for name in ("returns.csv", "fundamentals.csv", "riskfree.csv"))


@pytest.fixture(scope="session")
def raw_panel():
    return load_panel(*fixture_paths())


@pytest.fixture(scope="session")
def fixture_panel(raw_panel):
    return apply_filters(raw_panel)


def pytest_terminal_summary(terminalreporter):
    try:
        import test_acceptance
    except ImportError:
        return
    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
