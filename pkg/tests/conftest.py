import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings as hsettings

sys.path.insert(0, str(Path(__file__).parent))

from closedchar import settings  # noqa: E402

hsettings.register_profile("default", deadline=None, max_examples=40,
                           suppress_health_check=[HealthCheck.too_slow])
hsettings.load_profile("default")

ACCEPTANCE = {}


@pytest.fixture(autouse=True)
def _fresh_tolerances():
    settings.reset()
    yield
    settings.reset()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
