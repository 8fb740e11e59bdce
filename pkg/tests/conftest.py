import pytest

_LINES = []


@pytest.fixture
def criterion(capsys):
    """Record one acceptance line: ``criterion(n, title, ok, detail)``."""

    def record(n, title, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {n:>2}: {title}  {detail}".rstrip()
        _LINES.append(line)
        with capsys.disabled():
            print("\n" + line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
