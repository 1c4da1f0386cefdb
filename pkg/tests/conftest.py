from importlib import resources
from pathlib import Path

import pytest


@pytest.fixture(scope="session")
def scenario_dir() -> Path:
    return Path(str(resources.files("eband.data").joinpath("scenarios")))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
