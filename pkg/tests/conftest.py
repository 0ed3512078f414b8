import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from acceptance_log import LINES as ACCEPTANCE_LINES  # noqa: E402
from whamcan.config import ScenarioConfig, default_nodes  # noqa: E402


@pytest.fixture
def default_cfg():
    return ScenarioConfig()


@pytest.fixture
def roster_nodes():
    return default_nodes()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
