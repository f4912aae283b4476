import pytest

ACCEPTANCE: dict = {}


def record(number: int, name: str, ok: bool, detail: str) -> None:
    """Note one acceptance criterion's outcome for the end-of-run table."""
    ACCEPTANCE[number] = (name, ok, detail)
    print(f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {name}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        name, ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:>2} {'PASS' if ok else 'FAIL'}  {name}: {detail}")


@pytest.fixture
def criterion():
    return record
