import pytest

# acceptance verdicts, filled in by test_acceptance and echoed after the run
ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def record():
    def _record(criterion: int, passed: bool, detail: str):
        line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE[criterion] = line
        print(line)
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for c in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[c])
