import pytest

_CRITERIA = {}


@pytest.fixture
def criterion():
    """Record the outcome of an acceptance criterion for the terminal summary."""
    def record(number, title, ok, detail=""):
        _CRITERIA[number] = (title, bool(ok), detail)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok, detail = _CRITERIA[number]
        terminalreporter.write_line(
            f"ACCEPTANCE {number} {'PASS' if ok else 'FAIL'} {title}: {detail}")
