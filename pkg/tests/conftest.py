import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from isingcorr.engine import build_table  # noqa: E402


@pytest.fixture(scope="session")
def table():
    """Box Nmax = 4 plus every point with M + N <= 5 (rows and diagonals up to 5)."""
    return build_table(4, full_layers=5)


@pytest.fixture(scope="session")
def small_table():
    return build_table(2)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
