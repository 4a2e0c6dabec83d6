import pytest

# criterion number -> (passed, detail), filled by the acceptance suite
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[number] = (bool(passed), detail)
    print(f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail}")


@pytest.fixture
def report():
    return record
