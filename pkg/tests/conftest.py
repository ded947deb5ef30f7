import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_VERDICTS = []


@pytest.fixture
def verdict():
    """Record a pass/fail line for the acceptance summary, then assert it."""

    def record(name, ok, detail=""):
        if ok is None:
            _VERDICTS.append((name, None, detail))
            pytest.skip(detail)
        _VERDICTS.append((name, bool(ok), detail))
        assert ok, f"{name}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _VERDICTS:
        tag = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
        terminalreporter.write_line(f"{tag}  {name}  {detail}")
