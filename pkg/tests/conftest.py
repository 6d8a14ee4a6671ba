import pytest

_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_log():
    """Record one PASS/FAIL line per acceptance criterion."""
    def log(number, title, ok, detail, elapsed, limit):
        status = "PASS" if ok else "FAIL"
        line = (f"[{status}] criterion {number:2d} {title}: {detail}; "
                f"runtime {elapsed:.2f} s (limit {limit:g} s)")
        _ACCEPTANCE_LINES.append((number, line))
        print(line)
    return log


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
