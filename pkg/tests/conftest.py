import pytest

_ACCEPTANCE_LINES = {}


def record_acceptance(num: int, passed: bool, message: str) -> bool:
    """Stash one acceptance verdict line; the terminal summary prints them."""
    _ACCEPTANCE_LINES[num] = f"ACCEPTANCE {num} {'PASS' if passed else 'FAIL'}: {message}"
    return passed


@pytest.fixture(scope="session")
def acceptance():
    return record_acceptance


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_ACCEPTANCE_LINES):
        terminalreporter.write_line(_ACCEPTANCE_LINES[num])
