import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def report_line():
    """Record one acceptance verdict line; all lines are echoed after the run."""
    def add(line):
        print(line)
        ACCEPTANCE_LINES.append(line)
    return add


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("C", 1)[1].split()[0])):
            terminalreporter.write_line(line)
