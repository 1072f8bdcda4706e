import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tendonhand.hand_model import default_hand_spec  # noqa: E402

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def spec():
    return default_hand_spec()


@pytest.fixture(scope="session")
def schedule(spec):
    return spec.link_schedule


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
