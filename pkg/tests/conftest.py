import pytest

_RESULTS: dict[int, tuple[bool, str]] = {}


class Criterion:
    """Collects one verdict line per acceptance criterion."""

    def __init__(self, number: int, title: str):
        self.number, self.title = number, title

    def check(self, ok: bool, detail: str) -> None:
        _RESULTS[self.number] = (bool(ok), f"{self.title}: {detail}")
        print(f"criterion {self.number:2d} {'PASS' if ok else 'FAIL'}  {self.title}: {detail}")
        assert ok, detail


@pytest.fixture
def criterion():
    return Criterion


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        ok, text = _RESULTS[number]
        terminalreporter.write_line(f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {text}")
