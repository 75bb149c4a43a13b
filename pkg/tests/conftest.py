import pytest

# one line per acceptance criterion, printed at the end of the session
CRITERIA_LINES = {}


@pytest.fixture
def criterion():
    def record(number, title, ok, detail=""):
        CRITERIA_LINES[number] = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {title}" + (
            f" ({detail})" if detail else "")
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA_LINES):
        terminalreporter.write_line(CRITERIA_LINES[number])
