import pytest

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(criterion: int, ok: bool, detail: str = "") -> None:
    # keep the first FAIL if a criterion is checked in pieces
    prev = ACCEPTANCE.get(criterion)
    if prev is None or prev[0]:
        ACCEPTANCE[criterion] = (bool(ok), detail)
    line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)


@pytest.fixture
def acceptance():
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
