import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion, then assert it."""
    def record(ok: bool, line: str):
        ACCEPTANCE_LINES.append(("PASS " if ok else "FAIL ") + line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter, exitstatus):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
