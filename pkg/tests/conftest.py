import numpy as np
import pytest

from sideslip import VehicleParams


@pytest.fixture
def params():
    return VehicleParams.default_sedan()


@pytest.fixture
def rng():
    return np.random.default_rng(42)


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance criterion report after capture is released."""
    try:
        from tests.test_acceptance import REPORT_LINES
    except ImportError:
        try:
            from test_acceptance import REPORT_LINES
        except ImportError:
            return
    if REPORT_LINES:
        terminalreporter.section("acceptance criteria")
        for line in REPORT_LINES:
            terminalreporter.write_line(line)
