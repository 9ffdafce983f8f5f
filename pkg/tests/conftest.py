import pytest

CRITERIA_LINES: list[str] = []


def record(line: str) -> None:
    print(line)
    CRITERIA_LINES.append(line)


@pytest.hookimpl(trylast=True)
def pytest_terminal_summary(terminalreporter):
    if CRITERIA_LINES:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA_LINES:
            terminalreporter.write_line(line)
