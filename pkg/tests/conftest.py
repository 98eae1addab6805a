import os
import sys

import pytest
from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None, max_examples=200)
settings.register_profile("ci", deadline=None, max_examples=60)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(params=["python", "compiled"])
def backend(request):
    from devlab import _backend

    if request.param == "compiled" and not _backend.compiled_available():
        pytest.skip("compiled kernel not built")
    return request.param


_ACCEPTANCE = []


@pytest.fixture(scope="session")
def acceptance_report():
    """Collects one ``criterion N: PASS|FAIL`` line per acceptance criterion."""
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)
