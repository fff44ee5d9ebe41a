import pytest


def pytest_configure(config):
    config._criterion_lines = {}


@pytest.fixture
def criterion_report(request):
    """Record one summary line per acceptance criterion."""
    lines = request.config._criterion_lines

    def record(number: int, line: str) -> None:
        lines[number] = line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_criterion_lines", {})
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(lines):
        terminalreporter.write_line(lines[number])
