import contextlib
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_ACCEPTANCE = []


@pytest.fixture
def criterion():
    """Context manager recording one PASS/FAIL line per acceptance criterion."""

    @contextlib.contextmanager
    def _record(label):
        try:
            yield
        except BaseException:
            _ACCEPTANCE.append(f"FAIL  {label}")
            raise
        _ACCEPTANCE.append(f"PASS  {label}")

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split("AC")[1].split()[0])):
        terminalreporter.write_line(line)
