import pytest

_criteria: dict[str, list[str]] = {}
_notes: list[tuple[str, str]] = []


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid or report.when != "call" and not report.failed:
        return
    name = report.nodeid.split("::")[-1]
    _criteria.setdefault(name, []).append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcomes in _criteria.items():
        status = "FAIL" if "failed" in outcomes else "PASS"
        terminalreporter.write_line(f"{status}  {name}")
    for title, text in _notes:
        terminalreporter.section(title, sep="-")
        terminalreporter.write_line(text.rstrip("\n"))


@pytest.fixture
def note():
    """Attach a titled block of text to the end-of-run summary."""
    return lambda title, text: _notes.append((title, text))

