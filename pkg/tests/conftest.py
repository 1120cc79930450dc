import pytest

_LINES = []


@pytest.fixture(scope="session")
def report():
    """Record a one-line acceptance verdict; all lines are echoed in the terminal summary."""
    def add(label, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'}  {label}  {detail}".rstrip()
        _LINES.append(line)
        print(line)
        return ok
    return add


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
