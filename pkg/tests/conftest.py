import pytest

from emergence.hilbert import build_grid

_ACCEPTANCE = []


@pytest.fixture
def record_criterion():
    """Collect one summary line per acceptance criterion."""

    def record(number, title, passed, detail=""):
        _ACCEPTANCE.append((number, title, passed, detail))
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'} {title} {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(_ACCEPTANCE):
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {number}. {title}  {detail}")


@pytest.fixture(scope="session")
def wide_grid():
    return build_grid(-16, 24, 512)

